//! Release gate: one test per shipping criterion, each printing a single
//! `ACCEPTANCE <k> (<name>): PASS|FAIL` line (visible with `--nocapture`).
//! Tolerances are pinned in the code next to each check.

mod common;

use std::sync::OnceLock;
use std::time::Instant;

use wcr_core::bayes::{
    draw_importance_restricted, draw_importance_unrestricted, ln_rate_lambda1_restricted,
    ln_rate_lambda1_unrestricted, ln_rate_lambda2_unrestricted, posterior_summary,
    weighted_hpd_bounds, Priors,
};
use wcr_core::bootstrap::bootstrap_mles;
use wcr_core::censoring::{
    effective_scheme, generate_sample, parse_scheme, Cause, CensoringPlan, CompetingRisksSample,
};
use wcr_core::error::Error;
use wcr_core::likelihood::{
    fit_restricted, fit_unrestricted, lrt_decision, lrt_equal_scales, FitOptions, Functional,
    ModelKind, ShapeProfile, SolverKind,
};
use wcr_core::sampling::{sample_uniform, seed_stream, StreamKey};
use wcr_core::study::{run_scenario, MetricsRow, ParamMetrics, ScenarioSpec};

fn report(k: usize, name: &str, failures: Vec<String>) {
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {k} ({name}): {verdict}");
    assert!(
        failures.is_empty(),
        "criterion {k} ({name}) failed:\n  {}",
        failures.join("\n  ")
    );
}

fn check(failures: &mut Vec<String>, ok: bool, detail: String) {
    if !ok {
        failures.push(detail);
    }
}

/// Datasets with more cause-1 than cause-2 failures (both present), drawn
/// from the randomized zoo.
fn dominant_cause_datasets(count: usize) -> Vec<CompetingRisksSample<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut seed = 0u64;
    while out.len() < count {
        let sample = common::zoo_sample(seed);
        if sample.m1() > sample.m2() && sample.m2() > 0 {
            out.push(sample);
        }
        seed += 1;
        assert!(seed < 20_000, "zoo ran dry before {count} datasets");
    }
    out
}

#[test]
fn acceptance_1_estimator_coincidence_at_scale() {
    // On 1000 datasets where cause 1 dominates, the order-restricted and
    // unrestricted fits must agree: 1e-8 relative on parameters, 1e-9
    // absolute on the maximized log-likelihood, all inside a minute.
    let started = Instant::now();
    let opts = FitOptions::default();
    let mut failures = Vec::new();
    for (i, sample) in dominant_cause_datasets(1000).iter().enumerate() {
        let r = fit_restricted(sample, &opts).unwrap();
        let u = fit_unrestricted(sample, &opts).unwrap();
        let pairs = [
            ("alpha", r.params.alpha, u.params.alpha),
            ("lambda1", r.params.lambda1, u.params.lambda1),
            ("lambda2", r.params.lambda2(), u.params.lambda2),
        ];
        for (name, a, b) in pairs {
            check(
                &mut failures,
                (a - b).abs() <= 1e-8 * b.abs(),
                format!("dataset {i}: {name} differs, {a} vs {b}"),
            );
        }
        check(
            &mut failures,
            (r.max_loglik - u.max_loglik).abs() <= 1e-9,
            format!(
                "dataset {i}: log-likelihoods differ, {} vs {}",
                r.max_loglik, u.max_loglik
            ),
        );
    }
    let elapsed = started.elapsed();
    check(
        &mut failures,
        elapsed.as_secs_f64() < 60.0,
        format!("took {elapsed:?}, budget is one minute"),
    );
    report(1, "estimator coincidence", failures);
}

#[test]
fn acceptance_2_solver_equivalence_and_concavity() {
    // The fixed-point shape estimate matches a golden-section maximization
    // of the profile within 1e-6, and the profile is concave by a
    // second-difference probe around (and away from) the optimum.
    let fp_opts = FitOptions::default();
    let golden_opts = FitOptions {
        solver: SolverKind::GoldenSection,
        ..FitOptions::default()
    };
    let mut failures = Vec::new();
    for seed in 0..1000u64 {
        let sample = common::zoo_sample(seed);
        let fp = fit_unrestricted(&sample, &fp_opts).unwrap();
        let gold = fit_unrestricted(&sample, &golden_opts).unwrap();
        check(
            &mut failures,
            (fp.params.alpha - gold.params.alpha).abs() <= 1e-6,
            format!(
                "dataset {seed}: solvers disagree, {} vs {}",
                fp.params.alpha, gold.params.alpha
            ),
        );

        let profile = ShapeProfile::new(&sample);
        let alpha_hat = fp.params.alpha;
        for factor in [0.5, 1.0, 2.0] {
            let a = alpha_hat * factor;
            let h = 1e-3 * a;
            let second = profile.p1(a - h) - 2.0 * profile.p1(a) + profile.p1(a + h);
            check(
                &mut failures,
                second < 0.0,
                format!("dataset {seed}: profile not concave at alpha = {a} ({second})"),
            );
        }
    }
    report(2, "solver equivalence and concavity", failures);
}

/// The shared desk-scale benchmark scenario: 50 units, 40 observed failures,
/// the last-stage removal scheme (0, ..., 0, 10), ideal duration 0.25, truth
/// alpha = 1.5, lambda1 = 1.2, lambda2 = 1.0; 500 replications with 500
/// bootstrap resamples and 2000 importance draws each.
fn desk_benchmark() -> &'static MetricsRow {
    static ROW: OnceLock<MetricsRow> = OnceLock::new();
    ROW.get_or_init(|| {
        let mut removals = vec![0usize; 40];
        removals[39] = 10;
        let spec = ScenarioSpec {
            name: "desk-benchmark".into(),
            plan: CensoringPlan::new(50, 40, removals, 0.25).unwrap(),
            alpha: 1.5,
            lambda1: 1.2,
            lambda2: 1.0,
            models: vec![ModelKind::Restricted, ModelKind::Unrestricted],
            replications: 500,
            bootstrap_draws: 500,
            importance_draws: 2000,
            level: 0.95,
            seed: 11,
            priors: Priors::default(),
        };
        run_scenario(&spec).expect("benchmark scenario must run")
    })
}

fn benchmark_cell(model: ModelKind, parameter: Functional) -> &'static ParamMetrics {
    desk_benchmark()
        .params
        .iter()
        .find(|p| p.model == model && p.parameter == parameter)
        .expect("benchmark row carries every monitored cell")
}

#[test]
fn acceptance_3_restricted_benchmark_metrics() {
    // Published desk-scale reference bands for the restricted model.
    let mut failures = Vec::new();
    let row = desk_benchmark();
    check(
        &mut failures,
        row.reps_used == 500 && !row.flagged,
        format!("{} of 500 replications usable", row.reps_used),
    );

    let alpha = benchmark_cell(ModelKind::Restricted, Functional::Alpha);
    let beta = benchmark_cell(ModelKind::Restricted, Functional::Beta);
    let bands: [(&str, f64, f64, f64); 5] = [
        ("bias(alpha)", alpha.mle_bias, 0.07, 0.03),
        ("mse(alpha)", alpha.mle_mse, 0.055, 0.025),
        ("percentile coverage(alpha)", alpha.cpp, 0.920, 0.04),
        ("symmetric-cri coverage(alpha)", alpha.cps, 0.944, 0.04),
        ("posterior bias(beta)", beta.be_bias, -0.09, 0.03),
    ];
    for (name, got, center, tol) in bands {
        check(
            &mut failures,
            (got - center).abs() <= tol,
            format!("{name} = {got:.4}, band {center} +- {tol}"),
        );
    }
    report(3, "restricted benchmark metrics", failures);
}

#[test]
fn acceptance_4_unrestricted_benchmark_spot_check() {
    // Published desk-scale reference bands for the unrestricted second scale.
    let mut failures = Vec::new();
    let cell = benchmark_cell(ModelKind::Unrestricted, Functional::Lambda2);
    check(
        &mut failures,
        (cell.cpp - 0.936).abs() <= 0.04,
        format!("percentile coverage(lambda2) = {:.4}, band 0.936 +- 0.04", cell.cpp),
    );
    check(
        &mut failures,
        (cell.als - 1.10).abs() <= 0.10,
        format!("symmetric-cri length(lambda2) = {:.4}, band 1.10 +- 0.10", cell.als),
    );
    report(4, "unrestricted benchmark spot check", failures);
}

#[test]
fn acceptance_5_lrt_calibration_and_worked_decision() {
    // Under equal scales the 5% test rejects at its nominal rate, and the
    // decision rule reproduces the worked example: statistic 7.619 against
    // critical value 3.84 rejects with the frozen p-value.
    let mut failures = Vec::new();

    let removals = parse_scheme("osp:10", 40).unwrap();
    let plan = CensoringPlan::new(50, 40, removals, 0.25).unwrap();
    let mut rejections = 0usize;
    let reps = 1000usize;
    for r in 0..reps {
        let key = StreamKey::new(2468, r as u64);
        let sample = generate_sample(&plan, 1.5, 1.0, 1.0, &mut key.generation()).unwrap();
        let test = lrt_equal_scales(&sample, 0.05).unwrap();
        if test.reject {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / reps as f64;
    check(
        &mut failures,
        (rate - 0.05).abs() <= 0.02,
        format!("null rejection rate {rate:.4}, band 0.05 +- 0.02"),
    );

    let worked = lrt_decision(7.619f64, 0.05).unwrap();
    check(&mut failures, worked.reject, "worked example must reject".into());
    check(
        &mut failures,
        (worked.critical - 3.841458820694124).abs() <= 1e-12,
        format!("critical value {} drifted", worked.critical),
    );
    check(
        &mut failures,
        (worked.p_value - 0.0057756505967718).abs() <= 1e-12,
        format!("worked p-value {} drifted", worked.p_value),
    );
    report(5, "lrt calibration and worked decision", failures);
}

#[test]
fn acceptance_6_importance_sampling_oracles() {
    let mut failures = Vec::new();
    let priors = Priors::default();

    // (a) Normalized weights sum to one within 1e-12 on every run.
    for seed in 0..40u64 {
        let sample = common::zoo_sample(seed);
        let key = StreamKey::new(60 + seed, 0);
        for restricted in [true, false] {
            let draws = if restricted {
                draw_importance_restricted(&sample, &priors, 1000, &mut key.importance(true))
            } else {
                draw_importance_unrestricted(&sample, &priors, 1000, &mut key.importance(false))
            }
            .unwrap();
            let total = common::kahan_total(&draws.norm_weights);
            check(
                &mut failures,
                (total - 1.0).abs() <= 1e-12,
                format!("weights sum to {total} (dataset {seed}, restricted={restricted})"),
            );
        }
    }

    // (b) Conditional gamma-mean oracle at 10^5 draws: each scale draw comes
    // from its conditional gamma, so the centered sum over draws is normal
    // with variance the summed conditional variances; check 3 sigma.
    let sample = common::zoo_sample(8);
    let profile = ShapeProfile::new(&sample);
    let m = sample.m() as f64;
    let m1 = sample.m1() as f64;
    let m2 = sample.m2() as f64;
    let big = 100_000usize;
    let key = StreamKey::new(31337, 0);

    let rdraws =
        draw_importance_restricted(&sample, &priors, big, &mut key.importance(true)).unwrap();
    {
        let shape = m + priors.a1;
        let mut centered = Vec::with_capacity(big);
        let mut variance = 0.0;
        for i in 0..big {
            let beta_i = rdraws.beta.as_ref().unwrap()[i];
            let rate = ln_rate_lambda1_restricted(&profile, &priors, rdraws.alpha[i], beta_i).exp();
            centered.push(rdraws.lambda1[i] - shape / rate);
            variance += shape / (rate * rate);
        }
        let z = common::kahan_total(&centered) / variance.sqrt();
        check(
            &mut failures,
            z.abs() <= 3.0,
            format!("restricted first-scale conditional mean off: z = {z:.3}"),
        );
    }

    let udraws =
        draw_importance_unrestricted(&sample, &priors, big, &mut key.importance(false)).unwrap();
    for (label, shape, values, ln_rate_of) in [
        (
            "first scale",
            m1 + priors.a4,
            &udraws.lambda1,
            ln_rate_lambda1_unrestricted as fn(&ShapeProfile<f64>, &Priors<f64>, f64) -> f64,
        ),
        (
            "second scale",
            m2 + priors.a5,
            udraws.lambda2.as_ref().unwrap(),
            ln_rate_lambda2_unrestricted,
        ),
    ] {
        let mut centered = Vec::with_capacity(big);
        let mut variance = 0.0;
        for i in 0..big {
            let rate = ln_rate_of(&profile, &priors, udraws.alpha[i]).exp();
            centered.push(values[i] - shape / rate);
            variance += shape / (rate * rate);
        }
        let z = common::kahan_total(&centered) / variance.sqrt();
        check(
            &mut failures,
            z.abs() <= 3.0,
            format!("unrestricted {label} conditional mean off: z = {z:.3}"),
        );
    }

    // (c) The two-pointer density interval equals an exhaustive search over
    // all index pairs on 1000 randomized weighted samples of up to 500
    // draws, ties, zero weights, and dominant atoms included.
    let mut rng = seed_stream(0x4A11, 0);
    let mut unresolved = 0usize;
    for case in 0..1000usize {
        let count = 2 + (case * 37) % 499;
        let mut values = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        for _ in 0..count {
            let u: f64 = sample_uniform(&mut rng);
            let v: f64 = sample_uniform(&mut rng);
            // A third of the cases quantize values so ties occur.
            values.push(if case % 3 == 0 {
                (u * 20.0).round() / 4.0
            } else {
                u * 5.0
            });
            // One in ten weights is exactly zero.
            weights.push(if v < 0.1 { 0.0 } else { v });
        }
        if case % 11 == 0 {
            // A dominant atom exercises the unresolvable path.
            let hot = rng.draw_index(count);
            weights[hot] = 1000.0;
        }
        if common::kahan_total(&weights) <= 0.0 {
            weights[0] = 1.0;
        }
        let total = common::kahan_total(&weights);
        weights.iter_mut().for_each(|w| *w /= total);
        let gamma = match case % 4 {
            0 => 0.05,
            1 => 0.1,
            2 => 0.5,
            _ => 0.01,
        };
        let fast = weighted_hpd_bounds(&values, &weights, gamma);
        let slow = exhaustive_hpd(&values, &weights, gamma);
        match (fast, slow) {
            (Ok(a), Ok(b)) => check(
                &mut failures,
                a == b,
                format!("case {case}: sweep gave {a:?}, exhaustive gave {b:?}"),
            ),
            (Err(Error::Resolution(_)), Err(Error::Resolution(_))) => unresolved += 1,
            (f, s) => check(
                &mut failures,
                false,
                format!("case {case}: outcomes diverge, {f:?} vs {s:?}"),
            ),
        }
    }
    check(
        &mut failures,
        unresolved > 0,
        "the unresolvable-mass path was never exercised".into(),
    );
    report(6, "importance sampling oracles", failures);
}

/// Quadratic reference for the density interval: identical sorting,
/// compensated prefix sums, and validity predicate, but scanning every index
/// pair instead of sweeping.
fn exhaustive_hpd(values: &[f64], weights: &[f64], gamma: f64) -> Result<(f64, f64), Error> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let sorted: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    let mut cum = Vec::with_capacity(values.len() + 1);
    cum.push(0.0f64);
    let mut running = 0.0f64;
    let mut carry = 0.0f64;
    for &i in &idx {
        let y = weights[i] - carry;
        let t = running + y;
        carry = (t - running) - y;
        running = t;
        cum.push(running);
    }
    let count = sorted.len();
    let target = 1.0 - gamma;
    let mut best: Option<(f64, f64, f64)> = None;
    for j1 in 1..=count {
        let base = cum[j1 - 1];
        for j2 in j1..=count {
            if j2 <= count - 1
                && cum[j2] - base <= target
                && cum[j2 + 1] - base > target
                && cum[j2] > base
            {
                let lower = sorted[j1 - 1];
                let upper = sorted[j2 - 1];
                let width = upper - lower;
                let improves = match &best {
                    None => true,
                    Some((w, _, _)) => width < *w,
                };
                if improves {
                    best = Some((width, lower, upper));
                }
            }
        }
    }
    match best {
        Some((_, lower, upper)) => Ok((lower, upper)),
        None => Err(Error::Resolution("no pair brackets the mass".into())),
    }
}

#[test]
fn acceptance_7_data_generation_oracle() {
    // With censoring off, the pooled minima are Weibull with the summed
    // rate: KS at the 0.1% level on 10^5 draws, cause-1 fraction within 3
    // binomial standard errors, and the effective-scheme postcondition on
    // every sample.
    let mut failures = Vec::new();
    let (alpha, lambda1, lambda2) = (1.5, 1.2, 1.0);
    let n = 100_000usize;
    let plan = CensoringPlan::new(n, n, vec![0; n], f64::INFINITY).unwrap();
    let key = StreamKey::new(777_001, 0);
    let sample = generate_sample(&plan, alpha, lambda1, lambda2, &mut key.generation()).unwrap();

    let rate_sum = lambda1 + lambda2;
    let d = common::ks_statistic(&sample.times, |x| common::weibull_cdf(x, alpha, rate_sum));
    let scaled = (n as f64).sqrt() * d;
    check(
        &mut failures,
        scaled < common::KS_CRIT_SQRT_N_0P1,
        format!(
            "pooled minima fail KS: sqrt(n) D = {scaled:.4} >= {}",
            common::KS_CRIT_SQRT_N_0P1
        ),
    );

    let p = lambda1 / rate_sum;
    let observed = sample.causes.iter().filter(|&&c| c == Cause::One).count() as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    check(
        &mut failures,
        (observed - p).abs() <= 3.0 * se,
        format!("cause-1 fraction {observed:.5} vs {p:.5} (3 se = {:.5})", 3.0 * se),
    );

    let recomputed = effective_scheme(&sample.plan, &sample.times).unwrap();
    check(
        &mut failures,
        recomputed == sample.effective_removals,
        "complete-sample effective scheme mismatch".into(),
    );
    for seed in 0..200u64 {
        let adaptive = common::zoo_sample(seed);
        let expected = effective_scheme(&adaptive.plan, &adaptive.times).unwrap();
        let total: usize = adaptive.effective_removals.iter().sum();
        check(
            &mut failures,
            expected == adaptive.effective_removals
                && total + adaptive.m() == adaptive.plan.n
                && adaptive.change_index
                    == adaptive
                        .times
                        .iter()
                        .filter(|&&x| x <= adaptive.plan.duration)
                        .count(),
            format!("effective-scheme postcondition broke on zoo dataset {seed}"),
        );
    }
    report(7, "data generation oracle", failures);
}

#[test]
fn acceptance_8_numerical_robustness_under_rescaling() {
    // The full pipeline tolerates times expressed in units 10^3 larger or
    // smaller: fits, bootstrap intervals, and posterior summaries all finish
    // with finite output, and importance weights never over- or underflow.
    let mut failures = Vec::new();
    let opts = FitOptions::default();
    let priors = Priors::default();

    let mut removals = vec![0usize; 30];
    removals[29] = 10;
    let plan = CensoringPlan::<f64>::new(40, 30, removals, 0.6).unwrap();
    let key = StreamKey::new(808, 0);
    let base = generate_sample(&plan, 1.2, 1.0, 0.8, &mut key.generation()).unwrap();

    for &c in &[1e3, 1e-3] {
        let mut scaled = base.clone();
        scaled.times.iter_mut().for_each(|x| *x *= c);
        scaled.plan.duration *= c;

        for restricted in [true, false] {
            let fitted = if restricted {
                fit_restricted(&scaled, &opts).unwrap().fitted()
            } else {
                fit_unrestricted(&scaled, &opts).unwrap().fitted()
            };
            for (value, name) in [
                (fitted.alpha(), "alpha"),
                (fitted.lambda1(), "lambda1"),
                (fitted.lambda2(), "lambda2"),
            ] {
                check(
                    &mut failures,
                    value.is_finite() && value >= 0.0,
                    format!("scale {c}: fitted {name} = {value}"),
                );
            }

            let run = bootstrap_mles(&scaled.plan, &fitted, 200, &key, &opts).unwrap();
            check(
                &mut failures,
                run.failures * 2 < run.requested,
                format!("scale {c}: {} of {} refits failed", run.failures, run.requested),
            );

            let draws = if restricted {
                draw_importance_restricted(&scaled, &priors, 1000, &mut key.importance(true))
            } else {
                draw_importance_unrestricted(&scaled, &priors, 1000, &mut key.importance(false))
            }
            .unwrap();
            check(
                &mut failures,
                draws.log_weights.iter().all(|w| w.is_finite()),
                format!("scale {c}: non-finite log-weights"),
            );
            let total = common::kahan_total(&draws.norm_weights);
            check(
                &mut failures,
                (total - 1.0).abs() <= 1e-12,
                format!("scale {c}: weights sum to {total}"),
            );
            let summary = posterior_summary(&draws, 0.05).unwrap();
            let finite_summary = summary.estimates.values().all(|v| v.is_finite())
                && summary
                    .cri
                    .symmetric
                    .values()
                    .chain(summary.cri.hpd.values())
                    .all(|b| b[0].is_finite() && b[1].is_finite() && b[0] <= b[1]);
            check(
                &mut failures,
                finite_summary,
                format!("scale {c}: posterior summary not finite"),
            );
        }
    }
    report(8, "numerical robustness under rescaling", failures);
}
