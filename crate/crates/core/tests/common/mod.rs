//! Helpers shared by the integration suites: goodness-of-fit statistics and
//! a small zoo of randomized datasets.

#![allow(dead_code)]

use wcr_core::censoring::{generate_sample, CensoringPlan, CompetingRisksSample};
use wcr_core::sampling::{seed_stream, RngStream};

/// Two-sided Kolmogorov-Smirnov statistic of `sorted` against the CDF `f`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], f: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = f(x);
        let above = (i as f64 + 1.0) / n - cdf;
        let below = cdf - i as f64 / n;
        d = d.max(above).max(below);
    }
    d
}

/// Asymptotic critical value of `sqrt(n) * D_n` at the 0.1% level:
/// `sqrt(-ln(0.0005) / 2)`.
pub const KS_CRIT_SQRT_N_0P1: f64 = 1.9494746035204051;

/// Compensated total of a slice, for bounds that outrun naive summation.
pub fn kahan_total(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Weibull CDF with shape `alpha` and rate `lambda`.
pub fn weibull_cdf(x: f64, alpha: f64, lambda: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-lambda * x.powf(alpha)).exp_m1()
    }
}

/// A varied, reproducible dataset: plan shape, truth, and censoring pattern
/// all keyed off `seed`.
pub fn zoo_sample(seed: u64) -> CompetingRisksSample<f64> {
    let mut rng = seed_stream(0xD00D + seed, 0);
    zoo_sample_from(seed, &mut rng)
}

/// As [`zoo_sample`] but drawing from a caller-owned stream.
pub fn zoo_sample_from(seed: u64, rng: &mut RngStream) -> CompetingRisksSample<f64> {
    let n = 18 + (seed % 5) as usize * 9; // 18..=54
    let m = n - 4 - (seed % 7) as usize; // leaves 4..=10 to remove
    let spread = n - m;
    let removals = match seed % 4 {
        0 => {
            let mut r = vec![0; m];
            r[m - 1] = spread;
            r
        }
        1 => {
            let mut r = vec![0; m];
            r[0] = spread;
            r
        }
        2 => {
            let mut r = vec![0; m];
            r[(m - 1) / 2] = spread;
            r
        }
        _ => {
            let mut r = vec![0; m];
            let mut left = spread;
            let mut i = 0;
            while left > 0 {
                r[i % m] += 1;
                left -= 1;
                i += 3;
            }
            r
        }
    };
    let duration = match seed % 3 {
        0 => f64::INFINITY,
        1 => 0.4 + (seed % 11) as f64 * 0.1,
        _ => 1.1,
    };
    let alpha = 0.5 + (seed % 9) as f64 * 0.35;
    let lambda1 = 0.6 + (seed % 6) as f64 * 0.25;
    let lambda2 = lambda1 * (0.45 + (seed % 5) as f64 * 0.12);
    let plan = CensoringPlan::new(n, m, removals, duration).unwrap();
    generate_sample(&plan, alpha, lambda1, lambda2, rng).unwrap()
}
