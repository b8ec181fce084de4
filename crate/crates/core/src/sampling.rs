//! Seedable, splittable random number streams and the scalar samplers built
//! on top of them.
//!
//! Every random quantity in the crate is drawn from an [`RngStream`], a
//! ChaCha8 generator addressed by a `(master_seed, stream_id)` pair. ChaCha
//! exposes 2^64 independent counter streams per seed, so distinct stream ids
//! give statistically independent sequences and re-seeding reproduces the
//! draw sequence exactly, on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::real::Real;

/// Number of stream ids reserved for one Monte Carlo replication.
///
/// Replication `r` owns stream ids `r * STREAM_BLOCK .. (r + 1) * STREAM_BLOCK`.
/// See [`StreamKey`] for the offsets used inside a block.
pub const STREAM_BLOCK: u64 = 1 << 20;

/// A deterministic random stream identified by `(master_seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    /// The seed this stream was created from.
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// The stream id this stream was created from.
    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform index in `[0, n)`, for random subset selection.
    pub fn draw_index(&mut self, n: usize) -> usize {
        assert!(n > 0, "draw_index needs a non-empty range");
        self.rng.gen_range(0..n)
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Creates the stream for `(master_seed, stream_id)`.
pub fn seed_stream(master_seed: u64, stream_id: u64) -> RngStream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id);
    RngStream {
        master_seed,
        stream_id,
        rng,
    }
}

/// Addresses the streams belonging to one Monte Carlo replication.
///
/// Offsets inside the replication block are fixed so that independent
/// consumers never collide: 0 is data generation, bootstrap resample `b`
/// (1-based) uses `b` for the restricted model and `2^19 + b` for the
/// unrestricted model, and the two importance samplers sit at the top of
/// the block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    pub master_seed: u64,
    pub replication: u64,
}

impl StreamKey {
    pub fn new(master_seed: u64, replication: u64) -> Self {
        StreamKey {
            master_seed,
            replication,
        }
    }

    /// Stream at a raw offset inside this replication's block.
    pub fn stream(&self, offset: u64) -> RngStream {
        assert!(offset < STREAM_BLOCK, "stream offset outside block");
        seed_stream(self.master_seed, self.replication * STREAM_BLOCK + offset)
    }

    /// Stream used to generate this replication's data set.
    pub fn generation(&self) -> RngStream {
        self.stream(0)
    }

    /// Stream for the `b`-th (1-based) bootstrap resample of a model family.
    pub fn bootstrap_resample(&self, restricted: bool, b: usize) -> RngStream {
        assert!(
            b >= 1 && b <= MAX_BOOTSTRAP_RESAMPLES,
            "bootstrap resample id outside the reserved range"
        );
        let base = if restricted { 0 } else { 1 << 19 };
        self.stream(base + b as u64)
    }

    /// Stream for a model family's importance sampler.
    pub fn importance(&self, restricted: bool) -> RngStream {
        if restricted {
            self.stream(STREAM_BLOCK - 2)
        } else {
            self.stream(STREAM_BLOCK - 1)
        }
    }
}

/// Largest bootstrap resample count addressable inside a replication block
/// without colliding with the importance-sampler streams.
pub const MAX_BOOTSTRAP_RESAMPLES: usize = (1 << 19) - 8;

/// Uniform draw from the open interval (0, 1).
///
/// Endpoint values are rejected so downstream logarithms stay finite.
pub fn sample_uniform<T: Real>(rng: &mut RngStream) -> T {
    loop {
        let u = T::unit_uniform(rng.rng());
        if u > T::zero() && u < T::one() {
            return u;
        }
    }
}

/// Inverse CDF of the Weibull(shape, rate) law with distribution function
/// `F(x) = 1 - exp(-rate * x^shape)`, evaluated at `u`.
pub fn weibull_inverse_cdf<T: Real>(u: T, shape: T, rate: T) -> T {
    (-(T::one() - u).ln() / rate).powf(shape.recip())
}

/// Weibull(shape, rate) draw by inverse-CDF transform of a uniform.
pub fn sample_weibull<T: Real>(rng: &mut RngStream, shape: T, rate: T) -> Result<T> {
    check_positive(shape, "weibull shape")?;
    check_positive(rate, "weibull rate")?;
    let u: T = sample_uniform(rng);
    // With u uniform on (0, 1), 1 - u is too; use the direct form so the
    // draw is exactly (-ln u / rate)^(1/shape).
    Ok((-(u.ln()) / rate).powf(shape.recip()))
}

/// Gamma(shape, rate) draw.
pub fn sample_gamma<T: Real>(rng: &mut RngStream, shape: T, rate: T) -> Result<T> {
    check_positive(shape, "gamma shape")?;
    check_positive(rate, "gamma rate")?;
    Ok(T::gamma_scale_draw(rng.rng(), shape, rate.recip()))
}

fn check_positive<T: Real>(x: T, what: &str) -> Result<()> {
    if !(x.is_finite() && x > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "{what} must be finite and strictly positive, got {x}"
        )));
    }
    Ok(())
}
