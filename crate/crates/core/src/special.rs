//! Small set of special functions needed for interval endpoints and the
//! likelihood-ratio test.
//!
//! Values come from `libm` (sub-ulp error function implementations) at double
//! precision and convert back to the generic scalar, which caps the
//! attainable accuracy at f64 level for every instantiation.

use crate::real::Real;

/// Complementary error function.
pub fn erfc<T: Real>(x: T) -> T {
    T::from_f64(libm::erfc(x.to_f64().unwrap_or(f64::NAN))).expect("erfc value representable")
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf<T: Real>(x: T) -> T {
    let x = x.to_f64().unwrap_or(f64::NAN);
    T::from_f64(0.5 * libm::erfc(-x / std::f64::consts::SQRT_2))
        .expect("cdf value representable")
}

/// Standard normal quantile, `Phi^{-1}(p)` for `p` in (0, 1).
///
/// Starts from the `statrs` inverse error function (accurate to roughly 1e-6)
/// and applies Newton polish steps against the `libm`-backed distribution
/// function until the update stalls, which brings the result to full double
/// precision.
pub fn normal_quantile<T: Real>(p: T) -> T {
    let p = p.to_f64().unwrap_or(f64::NAN);
    assert!(p > 0.0 && p < 1.0, "quantile level must lie in (0, 1)");
    let mut z = std::f64::consts::SQRT_2 * statrs::function::erf::erf_inv(2.0 * p - 1.0);
    for _ in 0..4 {
        let phi = 0.5 * libm::erfc(-z / std::f64::consts::SQRT_2);
        let dens = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if dens <= 0.0 {
            break;
        }
        let step = (phi - p) / dens;
        z -= step;
        if step.abs() <= 1e-16 * (1.0 + z.abs()) {
            break;
        }
    }
    T::from_f64(z).expect("quantile representable")
}

/// Quantile of the chi-square distribution with one degree of freedom:
/// the square of the matching two-sided normal quantile.
pub fn chi2_df1_quantile<T: Real>(p: T) -> T {
    let one = T::one();
    let two = T::from_f64(2.0).unwrap();
    let z = normal_quantile((one + p) / two);
    z * z
}

/// Survival function of the chi-square distribution with one degree of
/// freedom, `P(X > x) = erfc(sqrt(x / 2))`.
pub fn chi2_df1_sf<T: Real>(x: T) -> T {
    erfc((x / T::from_f64(2.0).unwrap()).sqrt())
}

/// `ln(e^a + e^b)` evaluated without overflow.
pub fn log_add_exp<T: Real>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(sum_i e^{x_i})` evaluated without overflow; negative infinity for an
/// empty slice or when every term is negative infinity.
pub fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let hi = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if !hi.is_finite() {
        // All -inf (or empty): the sum is zero. +inf or NaN propagate.
        return hi;
    }
    let sum: T = xs.iter().map(|&x| (x - hi).exp()).sum();
    hi + sum.ln()
}

/// Compensated (Kahan) summation, for sums whose small residual matters.
pub fn kahan_sum<T: Real>(xs: &[T]) -> T {
    let mut sum = T::zero();
    let mut carry = T::zero();
    for &x in xs {
        let y = x - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}
