//! Parametric bootstrap for functionals of a fitted model.
//!
//! Each resample regenerates a data set from the fitted parameters under the
//! original censoring plan, refits the same model family, and records the
//! refitted parameters. Percentile and bias-corrected normal intervals are
//! then read off the resampled functional values.

use rayon::prelude::*;

use crate::censoring::{CensoringPlan, generate_sample};
use crate::error::{Error, Result};
use crate::interval::{IntervalEstimate, IntervalMethod};
use crate::likelihood::{FitOptions, FittedModel, Functional};
use crate::real::Real;
use crate::sampling::{StreamKey, MAX_BOOTSTRAP_RESAMPLES};
use crate::special::normal_quantile;

/// Resampled refits of one model family.
#[derive(Debug, Clone)]
pub struct BootstrapRun<T> {
    /// The fit the resamples were generated from.
    pub point: FittedModel<T>,
    /// Successful refits, in resample-index order.
    pub fits: Vec<FittedModel<T>>,
    /// Number of resamples requested.
    pub requested: usize,
    /// Number of resamples whose refit failed.
    pub failures: usize,
}

impl<T: Real> BootstrapRun<T> {
    /// Fraction of resamples that failed to refit.
    pub fn failure_fraction(&self) -> f64 {
        self.failures as f64 / self.requested as f64
    }

    /// True when more than 10% of the refits failed; callers should surface
    /// this to the user.
    pub fn warn_failures(&self) -> bool {
        self.failures * 10 > self.requested
    }

    /// Resampled values of one functional, paired with the point estimate.
    pub fn draws_for(&self, functional: Functional) -> BootstrapDraws<T> {
        BootstrapDraws {
            functional,
            estimates: self.fits.iter().map(|f| f.value(functional)).collect(),
            point_estimate: self.point.value(functional),
            requested: self.requested,
            failures: self.failures,
        }
    }
}

/// Bootstrap estimates of a single scalar functional.
#[derive(Debug, Clone)]
pub struct BootstrapDraws<T> {
    pub functional: Functional,
    /// Successful resample estimates (length `requested - failures`).
    pub estimates: Vec<T>,
    /// Estimate from the original data.
    pub point_estimate: T,
    pub requested: usize,
    pub failures: usize,
}

/// Draws `b_count` parametric bootstrap refits of `fit`'s model family.
///
/// Resample `b` (1-based) consumes the dedicated stream
/// `key.bootstrap_resample(restricted, b)`, so results are bit-identical
/// across runs and thread counts; outputs are assembled in resample order.
/// Refits that fail are counted, never imputed; more than half failing is an
/// error. Refits that land on a boundary (an empty cause class in an
/// unrestricted resample) are valid draws.
pub fn bootstrap_mles<T: Real>(
    plan: &CensoringPlan<T>,
    fit: &FittedModel<T>,
    b_count: usize,
    key: &StreamKey,
    opts: &FitOptions<T>,
) -> Result<BootstrapRun<T>> {
    if b_count < 2 {
        return Err(Error::Precondition(format!(
            "bootstrap needs at least 2 resamples, got {b_count}"
        )));
    }
    if b_count > MAX_BOOTSTRAP_RESAMPLES {
        return Err(Error::Precondition(format!(
            "bootstrap resample count {b_count} exceeds the supported maximum {MAX_BOOTSTRAP_RESAMPLES}"
        )));
    }
    let (alpha, lambda1, lambda2) = (fit.alpha(), fit.lambda1(), fit.lambda2());
    for (value, name) in [(alpha, "alpha"), (lambda1, "lambda1"), (lambda2, "lambda2")] {
        if !(value.is_finite() && value > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "cannot resample from a fit whose {name} is {value}; \
                 all fitted parameters must be strictly positive"
            )));
        }
    }
    let restricted = matches!(fit, FittedModel::Restricted(_));
    let refit_opts = FitOptions {
        alpha0: Some(alpha),
        keep_trace: false,
        ..opts.clone()
    };

    let results: Vec<Option<FittedModel<T>>> = (1..=b_count)
        .into_par_iter()
        .map(|b| {
            let mut rng = key.bootstrap_resample(restricted, b);
            let resample = generate_sample(plan, alpha, lambda1, lambda2, &mut rng).ok()?;
            fit.refit(&resample, &refit_opts).ok()
        })
        .collect();

    let failures = results.iter().filter(|r| r.is_none()).count();
    if failures * 2 > b_count {
        return Err(Error::BootstrapFailures {
            failed: failures,
            requested: b_count,
        });
    }
    Ok(BootstrapRun {
        point: *fit,
        fits: results.into_iter().flatten().collect(),
        requested: b_count,
        failures,
    })
}

/// 1-based order-statistic index `ceil(count * q)`, clamped to `[1, count]`.
///
/// The ceiling is taken with a small tolerance so that a product that is
/// mathematically an integer (e.g. `1000 * 0.975`) is not pushed up a rank
/// by floating-point round-off.
fn order_index(count: usize, q: f64) -> usize {
    let raw = (count as f64 * q - 1e-9).ceil() as isize;
    raw.clamp(1, count as isize) as usize
}

fn check_draws<T: Real>(draws: &BootstrapDraws<T>, gamma: T) -> Result<()> {
    if draws.estimates.len() < 2 {
        return Err(Error::Precondition(format!(
            "interval construction needs at least 2 successful resamples, got {}",
            draws.estimates.len()
        )));
    }
    if !(gamma > T::zero() && gamma < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    let bad = draws.estimates.iter().filter(|e| !e.is_finite()).count();
    if bad > 0 {
        return Err(Error::Precondition(format!(
            "{bad} resample estimate(s) of {} are not finite",
            draws.functional
        )));
    }
    Ok(())
}

/// Percentile interval at confidence `1 - gamma`.
///
/// With `B'` successful estimates sorted ascending, the endpoints are the
/// order statistics at the 1-based indices `ceil(B' * gamma/2)` and
/// `ceil(B' * (1 - gamma/2))`; both endpoints are elements of the estimate
/// vector.
pub fn percentile_interval<T: Real>(
    draws: &BootstrapDraws<T>,
    gamma: T,
) -> Result<IntervalEstimate<T>> {
    check_draws(draws, gamma)?;
    let mut sorted = draws.estimates.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite estimates"));
    let count = sorted.len();
    let half = gamma.to_f64().expect("finite gamma") / 2.0;
    let lo = order_index(count, half);
    let hi = order_index(count, 1.0 - half);
    Ok(IntervalEstimate {
        functional: draws.functional,
        method: IntervalMethod::BootstrapPercentile,
        level: T::one() - gamma,
        lower: sorted[lo - 1],
        upper: sorted[hi - 1],
    })
}

/// Bias-corrected normal interval at confidence `1 - gamma`.
///
/// With bootstrap bias `b = mean - point_estimate` and unbiased sample
/// variance `v`, the interval is `point_estimate - b -+ z * sqrt(v)` where
/// `z` is the upper-`gamma/2` standard normal quantile.
pub fn normal_bootstrap_interval<T: Real>(
    draws: &BootstrapDraws<T>,
    gamma: T,
) -> Result<IntervalEstimate<T>> {
    check_draws(draws, gamma)?;
    if !draws.point_estimate.is_finite() {
        return Err(Error::Precondition(format!(
            "point estimate of {} is not finite",
            draws.functional
        )));
    }
    let count = T::from_usize(draws.estimates.len()).expect("small integer");
    let mean = draws.estimates.iter().copied().sum::<T>() / count;
    let var = draws
        .estimates
        .iter()
        .map(|&e| (e - mean) * (e - mean))
        .sum::<T>()
        / (count - T::one());
    let bias = mean - draws.point_estimate;
    let two = T::from_f64(2.0).unwrap();
    let z = normal_quantile(T::one() - gamma / two);
    let center = draws.point_estimate - bias;
    let halfwidth = z * var.sqrt();
    Ok(IntervalEstimate {
        functional: draws.functional,
        method: IntervalMethod::BootstrapNormal,
        level: T::one() - gamma,
        lower: center - halfwidth,
        upper: center + halfwidth,
    })
}
