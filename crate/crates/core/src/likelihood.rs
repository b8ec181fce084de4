//! Likelihood evaluation, maximum likelihood fits, and the likelihood-ratio
//! test for Weibull competing risks under the adaptive scheme.
//!
//! Both model families share the weighted power sums
//!
//! ```text
//! g(a)  = sum_i (R*_i + 1) x_i^a
//! g1(a) = sum_i (R*_i + 1) x_i^a ln x_i
//! g2(a) = sum_i (R*_i + 1) x_i^a (ln x_i)^2
//! ```
//!
//! and the profile log-likelihood of the common shape,
//!
//! ```text
//! p(a) = m ln a - m ln g(a) + (a - 1) sum_i ln x_i ,
//! ```
//!
//! which is strictly concave (by Cauchy-Schwarz, `g * g2 - g1^2 >= 0`) and is
//! the same function for the restricted, unrestricted, and equal-scales
//! models. Given the fitted shape, the scale estimates are closed-form. The
//! shape solver iterates the fixed-point map
//!
//! ```text
//! h(a) = [ g1(a)/g(a) - (1/m) sum_i ln x_i ]^{-1}
//! ```
//!
//! and falls back to golden-section search on the profile when the map
//! misbehaves; either route is finished with a guarded Newton polish so the
//! profile score vanishes at the returned shape.

use serde::{Deserialize, Serialize};

use crate::censoring::CompetingRisksSample;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::special::{chi2_df1_quantile, chi2_df1_sf};

/// Model family of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Scales ordered as `lambda1 >= lambda2` (`lambda2 = beta * lambda1`).
    Restricted,
    /// Scales free.
    Unrestricted,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Restricted => write!(f, "restricted"),
            ModelKind::Unrestricted => write!(f, "unrestricted"),
        }
    }
}

/// Scalar functional of a fitted model, used to name bootstrap and posterior
/// targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Functional {
    Alpha,
    Lambda1,
    Lambda2,
    Beta,
}

impl Functional {
    pub fn name(self) -> &'static str {
        match self {
            Functional::Alpha => "alpha",
            Functional::Lambda1 => "lambda1",
            Functional::Lambda2 => "lambda2",
            Functional::Beta => "beta",
        }
    }
}

impl std::fmt::Display for Functional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters of the order-restricted model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RestrictedParams<T> {
    pub alpha: T,
    pub lambda1: T,
    /// Scale ratio `lambda2 / lambda1`, constrained to (0, 1].
    pub beta: T,
}

impl<T: Real> RestrictedParams<T> {
    pub fn new(alpha: T, lambda1: T, beta: T) -> Result<Self> {
        check_positive(alpha, "alpha")?;
        check_positive(lambda1, "lambda1")?;
        if !(beta.is_finite() && beta > T::zero() && beta <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in (0, 1], got {beta}"
            )));
        }
        Ok(RestrictedParams {
            alpha,
            lambda1,
            beta,
        })
    }

    /// Implied second scale `lambda2 = beta * lambda1`.
    pub fn lambda2(&self) -> T {
        self.beta * self.lambda1
    }
}

/// Parameters of the unrestricted model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnrestrictedParams<T> {
    pub alpha: T,
    pub lambda1: T,
    pub lambda2: T,
}

impl<T: Real> UnrestrictedParams<T> {
    pub fn new(alpha: T, lambda1: T, lambda2: T) -> Result<Self> {
        check_positive(alpha, "alpha")?;
        check_positive(lambda1, "lambda1")?;
        check_positive(lambda2, "lambda2")?;
        Ok(UnrestrictedParams {
            alpha,
            lambda1,
            lambda2,
        })
    }
}

/// Parameters of the equal-scales null model (`lambda1 = lambda2 = lambda`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EqualScalesParams<T> {
    pub alpha: T,
    pub lambda: T,
}

/// Outcome of a maximum likelihood fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T, P> {
    pub params: P,
    pub max_loglik: T,
    /// Iterations spent by the primary solver (fixed-point or golden).
    pub iterations: usize,
    pub converged: bool,
    /// True when the golden-section fallback produced the shape.
    pub used_fallback: bool,
    /// True when a scale estimate sits on the boundary (an empty cause
    /// class forces its `lambda` to zero); only unrestricted fits can be
    /// flagged.
    pub boundary: bool,
    /// Shape iterates, recorded when requested in [`FitOptions`].
    pub trace: Option<Vec<T>>,
}

/// A fitted model of either family, as used by resampling code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FittedModel<T> {
    Restricted(RestrictedParams<T>),
    Unrestricted(UnrestrictedParams<T>),
}

impl<T: Real> FittedModel<T> {
    pub fn kind(&self) -> ModelKind {
        match self {
            FittedModel::Restricted(_) => ModelKind::Restricted,
            FittedModel::Unrestricted(_) => ModelKind::Unrestricted,
        }
    }

    pub fn alpha(&self) -> T {
        match self {
            FittedModel::Restricted(p) => p.alpha,
            FittedModel::Unrestricted(p) => p.alpha,
        }
    }

    pub fn lambda1(&self) -> T {
        match self {
            FittedModel::Restricted(p) => p.lambda1,
            FittedModel::Unrestricted(p) => p.lambda1,
        }
    }

    pub fn lambda2(&self) -> T {
        match self {
            FittedModel::Restricted(p) => p.lambda2(),
            FittedModel::Unrestricted(p) => p.lambda2,
        }
    }

    /// Scale ratio; for an unrestricted fit this is `lambda2 / lambda1`.
    pub fn beta(&self) -> T {
        match self {
            FittedModel::Restricted(p) => p.beta,
            FittedModel::Unrestricted(p) => p.lambda2 / p.lambda1,
        }
    }

    /// Value of a named functional of this fit.
    pub fn value(&self, functional: Functional) -> T {
        match functional {
            Functional::Alpha => self.alpha(),
            Functional::Lambda1 => self.lambda1(),
            Functional::Lambda2 => self.lambda2(),
            Functional::Beta => self.beta(),
        }
    }

    /// Fits the same model family to another sample.
    pub fn refit(
        &self,
        sample: &CompetingRisksSample<T>,
        opts: &FitOptions<T>,
    ) -> Result<FittedModel<T>> {
        match self.kind() {
            ModelKind::Restricted => {
                fit_restricted(sample, opts).map(|f| FittedModel::Restricted(f.params))
            }
            ModelKind::Unrestricted => {
                fit_unrestricted(sample, opts).map(|f| FittedModel::Unrestricted(f.params))
            }
        }
    }
}

/// JSON view of a fit, with the wire-format field names.
#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub model: ModelKind,
    pub alpha: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub boundary: bool,
}

impl<T: Real> FitResult<T, RestrictedParams<T>> {
    pub fn summary(&self) -> FitSummary {
        FitSummary {
            model: ModelKind::Restricted,
            alpha: self.params.alpha.to_f64().unwrap_or(f64::NAN),
            lambda1: self.params.lambda1.to_f64().unwrap_or(f64::NAN),
            lambda2: self.params.lambda2().to_f64().unwrap_or(f64::NAN),
            beta: Some(self.params.beta.to_f64().unwrap_or(f64::NAN)),
            loglik: self.max_loglik.to_f64().unwrap_or(f64::NAN),
            converged: self.converged,
            iterations: self.iterations,
            boundary: self.boundary,
        }
    }

    pub fn fitted(&self) -> FittedModel<T> {
        FittedModel::Restricted(self.params)
    }
}

impl<T: Real> FitResult<T, UnrestrictedParams<T>> {
    pub fn summary(&self) -> FitSummary {
        FitSummary {
            model: ModelKind::Unrestricted,
            alpha: self.params.alpha.to_f64().unwrap_or(f64::NAN),
            lambda1: self.params.lambda1.to_f64().unwrap_or(f64::NAN),
            lambda2: self.params.lambda2.to_f64().unwrap_or(f64::NAN),
            beta: None,
            loglik: self.max_loglik.to_f64().unwrap_or(f64::NAN),
            converged: self.converged,
            iterations: self.iterations,
            boundary: self.boundary,
        }
    }

    pub fn fitted(&self) -> FittedModel<T> {
        FittedModel::Unrestricted(self.params)
    }
}

/// Raw weighted power sums `(g, g1, g2)` at a given shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSums<T> {
    pub g: T,
    pub g1: T,
    pub g2: T,
}

/// Computes the raw weighted power sums at shape `alpha`.
pub fn weighted_power_sums<T: Real>(
    sample: &CompetingRisksSample<T>,
    alpha: T,
) -> Result<PowerSums<T>> {
    check_positive(alpha, "alpha")?;
    let mut g = T::zero();
    let mut g1 = T::zero();
    let mut g2 = T::zero();
    for (&x, &r) in sample.times.iter().zip(&sample.effective_removals) {
        let w = T::from_usize(r + 1).expect("small integer");
        let lx = x.ln();
        let t = w * x.powf(alpha);
        g = g + t;
        g1 = g1 + t * lx;
        g2 = g2 + t * lx * lx;
    }
    Ok(PowerSums { g, g1, g2 })
}

/// Cached per-sample quantities for repeated profile evaluations.
///
/// All sums are evaluated in shifted form (`exp(a ln x_i - L)` with `L` the
/// largest exponent), so the profile and its derivatives stay finite for any
/// positive shape even when the raw power sums would overflow or underflow.
#[derive(Debug, Clone)]
pub struct ShapeProfile<T> {
    lnx: Vec<T>,
    weights: Vec<T>,
    count: usize,
    sum_lnx: T,
}

struct Ratios<T> {
    ln_g: T,
    r1: T,
    r2: T,
}

impl<T: Real> ShapeProfile<T> {
    pub fn new(sample: &CompetingRisksSample<T>) -> Self {
        let lnx: Vec<T> = sample.times.iter().map(|x| x.ln()).collect();
        let weights: Vec<T> = sample
            .effective_removals
            .iter()
            .map(|&r| T::from_usize(r + 1).expect("small integer"))
            .collect();
        let sum_lnx = lnx.iter().copied().sum();
        ShapeProfile {
            lnx,
            weights,
            count: sample.times.len(),
            sum_lnx,
        }
    }

    /// Number of observed failures.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Sum of log failure times.
    pub fn sum_lnx(&self) -> T {
        self.sum_lnx
    }

    fn ratios(&self, alpha: T) -> Ratios<T> {
        debug_assert!(alpha > T::zero());
        let shift = self
            .lnx
            .iter()
            .map(|&lx| alpha * lx)
            .fold(T::neg_infinity(), T::max);
        let mut s0 = T::zero();
        let mut s1 = T::zero();
        let mut s2 = T::zero();
        for (&lx, &w) in self.lnx.iter().zip(&self.weights) {
            let e = w * (alpha * lx - shift).exp();
            s0 = s0 + e;
            s1 = s1 + e * lx;
            s2 = s2 + e * lx * lx;
        }
        Ratios {
            ln_g: shift + s0.ln(),
            r1: s1 / s0,
            r2: s2 / s0,
        }
    }

    /// Logarithm of the weighted power sum `g(alpha)`.
    pub fn ln_g(&self, alpha: T) -> T {
        self.ratios(alpha).ln_g
    }

    /// Profile log-likelihood of the shape (up to an additive constant).
    pub fn p1(&self, alpha: T) -> T {
        let m = T::from_usize(self.count).expect("small integer");
        m * alpha.ln() - m * self.ln_g(alpha) + (alpha - T::one()) * self.sum_lnx
    }

    /// First derivative of the profile.
    pub fn dp1(&self, alpha: T) -> T {
        let m = T::from_usize(self.count).expect("small integer");
        let r = self.ratios(alpha);
        m / alpha - m * r.r1 + self.sum_lnx
    }

    /// Second derivative of the profile; strictly negative for any valid
    /// sample with two distinct times.
    pub fn d2p1(&self, alpha: T) -> T {
        let m = T::from_usize(self.count).expect("small integer");
        let r = self.ratios(alpha);
        -(m / (alpha * alpha)) - m * (r.r2 - r.r1 * r.r1)
    }

    /// Fixed-point map `h`; `None` when the denominator is not positive,
    /// which signals an iterate outside the contraction basin.
    pub fn h(&self, alpha: T) -> Option<T> {
        let m = T::from_usize(self.count).expect("small integer");
        let denom = self.ratios(alpha).r1 - self.sum_lnx / m;
        if denom > T::zero() {
            Some(denom.recip())
        } else {
            None
        }
    }
}

/// Profile log-likelihood of the shape for a sample.
pub fn profile_p1<T: Real>(alpha: T, sample: &CompetingRisksSample<T>) -> Result<T> {
    check_positive(alpha, "alpha")?;
    Ok(ShapeProfile::new(sample).p1(alpha))
}

/// One application of the fixed-point map `h` at `alpha`.
pub fn fixed_point_map_h<T: Real>(alpha: T, sample: &CompetingRisksSample<T>) -> Result<T> {
    check_positive(alpha, "alpha")?;
    ShapeProfile::new(sample).h(alpha).ok_or_else(|| {
        Error::SolverInconsistency(format!(
            "fixed-point map undefined at alpha = {alpha}: non-positive denominator"
        ))
    })
}

/// Shape solver selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    /// Fixed-point iteration on `h`, falling back to golden-section search
    /// when the map leaves the basin or fails to converge.
    FixedPointWithFallback,
    /// Golden-section search on the profile only.
    GoldenSection,
}

/// Options for the maximum likelihood fits.
#[derive(Debug, Clone)]
pub struct FitOptions<T> {
    /// Starting shape; when absent, the regression prestimate of the sample
    /// is used (1.0 if that is unavailable).
    pub alpha0: Option<T>,
    /// Fixed-point stopping threshold on successive iterates.
    pub eps: T,
    /// Fixed-point iteration budget.
    pub max_iter: usize,
    pub solver: SolverKind,
    /// Record the shape iterates in the fit result.
    pub keep_trace: bool,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        FitOptions {
            alpha0: None,
            eps: T::from_f64(1e-8).unwrap(),
            max_iter: 500,
            solver: SolverKind::FixedPointWithFallback,
            keep_trace: false,
        }
    }
}

/// Bracket and tolerance for the golden-section fallback.
const GOLDEN_LO: f64 = 1e-4;
const GOLDEN_HI: f64 = 1e4;
const GOLDEN_TOL: f64 = 1e-10;
const GOLDEN_MAX_ITER: usize = 400;

struct ShapeSolution<T> {
    alpha: T,
    iterations: usize,
    converged: bool,
    used_fallback: bool,
    trace: Vec<T>,
}

fn solve_shape<T: Real>(
    sample: &CompetingRisksSample<T>,
    profile: &ShapeProfile<T>,
    opts: &FitOptions<T>,
) -> Result<ShapeSolution<T>> {
    if sample.m() < 2 {
        return Err(Error::Degenerate(
            "shape estimation needs at least two observed failures".into(),
        ));
    }
    let start = match opts.alpha0 {
        Some(a) => {
            check_positive(a, "alpha0")?;
            a
        }
        None => default_start(sample),
    };

    let mut trace = vec![start];
    let mut solution = None;

    if opts.solver == SolverKind::FixedPointWithFallback {
        let mut alpha = start;
        for it in 1..=opts.max_iter {
            let next = match profile.h(alpha) {
                Some(v) if v.is_finite() && v > T::zero() => v,
                _ => break,
            };
            trace.push(next);
            if (next - alpha).abs() < opts.eps {
                solution = Some((next, it, false));
                break;
            }
            alpha = next;
            // A runaway iterate will not come back; hand over to the
            // bracketed search instead of burning the budget.
            if alpha > T::from_f64(1e8).unwrap() || alpha < T::from_f64(1e-10).unwrap() {
                break;
            }
        }
    }

    if solution.is_none() {
        let lo = T::from_f64(GOLDEN_LO).unwrap();
        let hi = T::from_f64(GOLDEN_HI).unwrap();
        let tol = T::from_f64(GOLDEN_TOL).unwrap();
        let (alpha, iters, width_ok) = golden_max(|a| profile.p1(a), lo, hi, tol);
        trace.push(alpha);
        if !width_ok {
            let trace_f64: Vec<f64> = trace.iter().map(|a| a.to_f64().unwrap_or(f64::NAN)).collect();
            return Err(Error::NonConvergence {
                iterations: iters,
                last_step: f64::NAN,
                trace: trace_f64,
            });
        }
        solution = Some((alpha, iters, true));
    }

    let (alpha, iterations, used_fallback) = solution.expect("set on both paths");
    let polished = newton_polish(profile, alpha);
    if polished != alpha {
        trace.push(polished);
    }
    Ok(ShapeSolution {
        alpha: polished,
        iterations,
        converged: true,
        used_fallback,
        trace,
    })
}

/// Starting value for the shape solver: the regression prestimate, clamped
/// into the search bracket, or 1 when the prestimate is unusable.
fn default_start<T: Real>(sample: &CompetingRisksSample<T>) -> T {
    let guess = crate::bayes::prestimate_alpha(sample);
    if guess.is_finite() && guess > T::zero() {
        guess
            .max(T::from_f64(1e-3).unwrap())
            .min(T::from_f64(1e3).unwrap())
    } else {
        T::one()
    }
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
fn golden_max<T: Real>(f: impl Fn(T) -> T, lo: T, hi: T, tol: T) -> (T, usize, bool) {
    let invphi = T::from_f64((5.0f64.sqrt() - 1.0) / 2.0).unwrap();
    let eight = T::from_f64(8.0).unwrap();
    let mut a = lo;
    let mut b = hi;
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for it in 1..=GOLDEN_MAX_ITER {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
        let width_floor = tol + eight * T::epsilon() * (a.abs() + b.abs());
        if b - a <= width_floor {
            let mid = (a + b) / T::from_f64(2.0).unwrap();
            return (mid, it, true);
        }
    }
    let mid = (a + b) / T::from_f64(2.0).unwrap();
    (mid, GOLDEN_MAX_ITER, false)
}

/// Newton refinement of the profile score at a near-optimal shape. Bails out
/// rather than accept a wild step, so the input is never made worse.
fn newton_polish<T: Real>(profile: &ShapeProfile<T>, mut alpha: T) -> T {
    let half = T::from_f64(0.5).unwrap();
    let rel_floor = T::from_f64(1e-15).unwrap();
    for _ in 0..32 {
        let d2 = profile.d2p1(alpha);
        if !(d2 < T::zero()) {
            break;
        }
        let step = profile.dp1(alpha) / d2;
        if !step.is_finite() || step.abs() > half * alpha {
            break;
        }
        let next = alpha - step;
        if !(next.is_finite() && next > T::zero()) {
            break;
        }
        alpha = next;
        if step.abs() <= rel_floor * alpha {
            break;
        }
    }
    alpha
}

/// Fits the order-restricted model.
///
/// The scale ratio has the closed form `beta = m2/m1` when `m1 > m2` and
/// sits at 1 otherwise; given the fitted shape, `lambda1` follows in closed
/// form. When `m1 > m2` the restricted estimates coincide with the
/// unrestricted ones.
pub fn fit_restricted<T: Real>(
    sample: &CompetingRisksSample<T>,
    opts: &FitOptions<T>,
) -> Result<FitResult<T, RestrictedParams<T>>> {
    let profile = ShapeProfile::new(sample);
    let sol = solve_shape(sample, &profile, opts)?;
    let m = sample.m();
    let m1 = sample.m1();
    let m2 = sample.m2();
    let beta = if m1 > m2 {
        T::from_usize(m2).unwrap() / T::from_usize(m1).unwrap()
    } else {
        T::one()
    };
    let g = weighted_power_sums(sample, sol.alpha)?.g;
    let lambda1 = T::from_usize(m).unwrap() / ((T::one() + beta) * g);
    let params = RestrictedParams::new(sol.alpha, lambda1, beta)?;
    let max_loglik = loglik_restricted(&params, sample)?;
    Ok(FitResult {
        params,
        max_loglik,
        iterations: sol.iterations,
        converged: sol.converged,
        used_fallback: sol.used_fallback,
        boundary: false,
        trace: opts.keep_trace.then_some(sol.trace),
    })
}

/// Fits the unrestricted model.
///
/// An empty cause class pushes its scale to the boundary value zero; the fit
/// is returned with the `boundary` flag set rather than failing.
pub fn fit_unrestricted<T: Real>(
    sample: &CompetingRisksSample<T>,
    opts: &FitOptions<T>,
) -> Result<FitResult<T, UnrestrictedParams<T>>> {
    let profile = ShapeProfile::new(sample);
    let sol = solve_shape(sample, &profile, opts)?;
    let m1 = sample.m1();
    let m2 = sample.m2();
    let g = weighted_power_sums(sample, sol.alpha)?.g;
    let lambda1 = T::from_usize(m1).unwrap() / g;
    let lambda2 = T::from_usize(m2).unwrap() / g;
    let boundary = m1 == 0 || m2 == 0;
    let params = UnrestrictedParams {
        alpha: sol.alpha,
        lambda1,
        lambda2,
    };
    let max_loglik = unrestricted_loglik_value(sol.alpha, lambda1, lambda2, sample)?;
    Ok(FitResult {
        params,
        max_loglik,
        iterations: sol.iterations,
        converged: sol.converged,
        used_fallback: sol.used_fallback,
        boundary,
        trace: opts.keep_trace.then_some(sol.trace),
    })
}

/// Fits the equal-scales null model (`lambda1 = lambda2`).
pub fn fit_null_equal_scales<T: Real>(
    sample: &CompetingRisksSample<T>,
    opts: &FitOptions<T>,
) -> Result<FitResult<T, EqualScalesParams<T>>> {
    let profile = ShapeProfile::new(sample);
    let sol = solve_shape(sample, &profile, opts)?;
    let g = weighted_power_sums(sample, sol.alpha)?.g;
    let two = T::from_f64(2.0).unwrap();
    let lambda = T::from_usize(sample.m()).unwrap() / (two * g);
    let params = EqualScalesParams {
        alpha: sol.alpha,
        lambda,
    };
    let max_loglik = loglik_null(&params, sample)?;
    Ok(FitResult {
        params,
        max_loglik,
        iterations: sol.iterations,
        converged: sol.converged,
        used_fallback: sol.used_fallback,
        boundary: false,
        trace: opts.keep_trace.then_some(sol.trace),
    })
}

/// Log-likelihood of the order-restricted model.
pub fn loglik_restricted<T: Real>(
    params: &RestrictedParams<T>,
    sample: &CompetingRisksSample<T>,
) -> Result<T> {
    RestrictedParams::new(params.alpha, params.lambda1, params.beta)?;
    let m = T::from_usize(sample.m()).unwrap();
    let m2 = T::from_usize(sample.m2()).unwrap();
    let g = weighted_power_sums(sample, params.alpha)?.g;
    let sum_lnx: T = sample.times.iter().map(|x| x.ln()).sum();
    Ok(m * (params.alpha.ln() + params.lambda1.ln())
        + m2 * params.beta.ln()
        + (params.alpha - T::one()) * sum_lnx
        - params.lambda1 * (T::one() + params.beta) * g)
}

/// Log-likelihood of the unrestricted model.
///
/// A zero scale is admitted only together with an empty cause class (the
/// boundary convention `0 * ln 0 = 0`); a zero scale with observed failures
/// of that cause evaluates to negative infinity.
pub fn loglik_unrestricted<T: Real>(
    params: &UnrestrictedParams<T>,
    sample: &CompetingRisksSample<T>,
) -> Result<T> {
    for (value, name) in [
        (params.alpha, "alpha"),
        (params.lambda1, "lambda1"),
        (params.lambda2, "lambda2"),
    ] {
        if !(value.is_finite() && value >= T::zero()) || (name == "alpha" && value <= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be finite and non-negative (alpha strictly positive), got {value}"
            )));
        }
    }
    unrestricted_loglik_value(params.alpha, params.lambda1, params.lambda2, sample)
}

fn unrestricted_loglik_value<T: Real>(
    alpha: T,
    lambda1: T,
    lambda2: T,
    sample: &CompetingRisksSample<T>,
) -> Result<T> {
    let m = T::from_usize(sample.m()).unwrap();
    let g = weighted_power_sums(sample, alpha)?.g;
    let sum_lnx: T = sample.times.iter().map(|x| x.ln()).sum();
    let mut ll = m * alpha.ln() + (alpha - T::one()) * sum_lnx - (lambda1 + lambda2) * g;
    for (count, lambda) in [(sample.m1(), lambda1), (sample.m2(), lambda2)] {
        if count > 0 {
            ll = ll + T::from_usize(count).unwrap() * lambda.ln();
        }
    }
    Ok(ll)
}

/// Log-likelihood of the equal-scales null model.
pub fn loglik_null<T: Real>(
    params: &EqualScalesParams<T>,
    sample: &CompetingRisksSample<T>,
) -> Result<T> {
    check_positive(params.alpha, "alpha")?;
    check_positive(params.lambda, "lambda")?;
    let m = T::from_usize(sample.m()).unwrap();
    let two = T::from_f64(2.0).unwrap();
    let g = weighted_power_sums(sample, params.alpha)?.g;
    let sum_lnx: T = sample.times.iter().map(|x| x.ln()).sum();
    Ok(m * (params.alpha.ln() + params.lambda.ln())
        + (params.alpha - T::one()) * sum_lnx
        - two * params.lambda * g)
}

/// Outcome of the likelihood-ratio test of scale equality.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LrtResult<T> {
    /// Test statistic `-2 (l_null - l_full)`.
    pub lambda_stat: T,
    pub df: u32,
    /// Chi-square critical value at the chosen significance.
    pub critical: T,
    pub p_value: T,
    pub reject: bool,
    pub significance: T,
}

/// Decision rule for a given statistic: compares against the chi-square(1)
/// critical value and computes the p-value from the survival function.
pub fn lrt_decision<T: Real>(lambda_stat: T, significance: T) -> Result<LrtResult<T>> {
    if !(significance > T::zero() && significance < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "significance must lie in (0, 1), got {significance}"
        )));
    }
    if !(lambda_stat.is_finite() && lambda_stat >= T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "test statistic must be finite and non-negative, got {lambda_stat}"
        )));
    }
    let critical = chi2_df1_quantile(T::one() - significance);
    Ok(LrtResult {
        lambda_stat,
        df: 1,
        critical,
        p_value: chi2_df1_sf(lambda_stat),
        reject: lambda_stat > critical,
        significance,
    })
}

/// Likelihood-ratio test of `lambda1 = lambda2` against the unrestricted
/// alternative.
pub fn lrt_equal_scales<T: Real>(
    sample: &CompetingRisksSample<T>,
    significance: T,
) -> Result<LrtResult<T>> {
    let opts = FitOptions::default();
    let null = fit_null_equal_scales(sample, &opts)?;
    let full = fit_unrestricted(sample, &opts)?;
    let two = T::from_f64(2.0).unwrap();
    let mut stat = -two * (null.max_loglik - full.max_loglik);
    let slack = T::from_f64(1e-8).unwrap() * (T::one() + full.max_loglik.abs());
    if stat < -slack {
        return Err(Error::SolverInconsistency(format!(
            "null log-likelihood exceeds the full model's ({} > {})",
            null.max_loglik, full.max_loglik
        )));
    }
    if stat <= T::zero() {
        // Also normalizes a negative zero from an exact tie.
        stat = T::zero();
    }
    lrt_decision(stat, significance)
}

fn check_positive<T: Real>(x: T, what: &str) -> Result<()> {
    if !(x.is_finite() && x > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "{what} must be finite and strictly positive, got {x}"
        )));
    }
    Ok(())
}
