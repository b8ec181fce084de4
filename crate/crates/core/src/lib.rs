//! Inference for Weibull competing-risks data observed under adaptive
//! progressive type-II censoring.
//!
//! Two latent Weibull causes with a common shape compete for each unit; the
//! experiment stops after `m` failures, removing surviving units according to
//! a pre-specified scheme that is adaptively truncated once an ideal test
//! duration `T` has passed. The crate provides:
//!
//! - data generation under the adaptive scheme ([`censoring`]),
//! - maximum likelihood fits with and without the order restriction
//!   `lambda1 >= lambda2`, plus a likelihood-ratio test of scale equality
//!   ([`likelihood`]),
//! - parametric bootstrap confidence intervals ([`bootstrap`]),
//! - importance-sampling Bayes estimates and credible intervals ([`bayes`]),
//! - a Monte Carlo study harness that reproduces bias/MSE/coverage tables
//!   ([`study`]).
//!
//! All numeric routines are generic over the scalar type through [`Real`]
//! (`f64` or `f32`); the type aliases at the crate root fix the common
//! double-precision instantiation.

pub mod bayes;
pub mod bootstrap;
pub mod censoring;
pub mod error;
pub mod interval;
pub mod likelihood;
pub mod real;
pub mod sampling;
pub mod special;
pub mod study;

pub use error::{Error, Result};
pub use real::Real;

/// Censoring plan at double precision.
pub type Plan = censoring::CensoringPlan<f64>;
/// Observed competing-risks sample at double precision.
pub type Sample = censoring::CompetingRisksSample<f64>;
/// Order-restricted fit at double precision.
pub type RestrictedFit = likelihood::FitResult<f64, likelihood::RestrictedParams<f64>>;
/// Unrestricted fit at double precision.
pub type UnrestrictedFit = likelihood::FitResult<f64, likelihood::UnrestrictedParams<f64>>;
/// Equal-scales (null model) fit at double precision.
pub type NullFit = likelihood::FitResult<f64, likelihood::EqualScalesParams<f64>>;
/// Importance-sampling posterior draws at double precision.
pub type Posterior = bayes::ImportanceDraws<f64>;
/// Two-sided interval estimate at double precision.
pub type Interval = interval::IntervalEstimate<f64>;
