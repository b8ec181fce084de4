//! Scalar abstraction for the numeric routines.

use std::fmt;
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::Distribution;

/// Floating-point scalar used throughout the crate.
///
/// Implemented for `f32` and `f64`. The two random-draw methods exist so that
/// generic code can sample without dragging distribution trait bounds through
/// every signature; both are deterministic given the generator state.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum<Self>
    + FromStr
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Uniform draw from `[0, 1)`.
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Gamma(shape, scale) draw. The caller guarantees both parameters are
    /// finite and strictly positive.
    fn gamma_scale_draw<R: Rng + ?Sized>(rng: &mut R, shape: Self, scale: Self) -> Self;
}

impl Real for f64 {
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        rng.gen()
    }

    fn gamma_scale_draw<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> f64 {
        rand_distr::Gamma::new(shape, scale)
            .expect("gamma parameters validated by caller")
            .sample(rng)
    }
}

impl Real for f32 {
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> f32 {
        rng.gen()
    }

    fn gamma_scale_draw<R: Rng + ?Sized>(rng: &mut R, shape: f32, scale: f32) -> f32 {
        rand_distr::Gamma::new(shape, scale)
            .expect("gamma parameters validated by caller")
            .sample(rng)
    }
}
