//! Monte Carlo study harness: runs factorial scenarios of the generation ->
//! fit -> bootstrap -> posterior pipeline and aggregates the table metrics
//! (bias and MSE for both estimation paradigms; coverage probability and
//! average length for all four interval constructions).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{
    bayes_estimate_of, draw_importance_restricted, draw_importance_unrestricted, hpd_cri,
    symmetric_cri, Priors,
};
use crate::bootstrap::{bootstrap_mles, normal_bootstrap_interval, percentile_interval};
use crate::censoring::{generate_sample, parse_scheme, CensoringPlan};
use crate::error::{Error, Result};
use crate::likelihood::{
    fit_restricted, fit_unrestricted, FitOptions, FittedModel, Functional, ModelKind,
};
use crate::real::Real;
use crate::sampling::StreamKey;

/// Removal scheme as written in a config file: an explicit list or a
/// shorthand such as `"right:10"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemeField {
    List(Vec<usize>),
    Text(String),
}

impl SchemeField {
    pub fn resolve(&self, m: usize) -> Result<Vec<usize>> {
        match self {
            SchemeField::List(v) => Ok(v.clone()),
            SchemeField::Text(t) => parse_scheme(t, m),
        }
    }
}

/// Ideal test duration as written in a config file: a number or `"inf"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DurationValue {
    Number(f64),
    Text(String),
}

impl DurationValue {
    pub fn resolve(&self) -> Result<f64> {
        match self {
            DurationValue::Number(v) => Ok(*v),
            DurationValue::Text(t) => {
                if t.trim().eq_ignore_ascii_case("inf") || t.trim().eq_ignore_ascii_case("infinity")
                {
                    Ok(f64::INFINITY)
                } else {
                    Err(Error::Parse(format!(
                        "duration must be a number or \"inf\", got \"{t}\""
                    )))
                }
            }
        }
    }
}

fn default_reps() -> usize {
    500
}
fn default_bootstrap() -> usize {
    500
}
fn default_importance() -> usize {
    2000
}
fn default_level() -> f64 {
    0.95
}
fn default_models() -> Vec<ModelKind> {
    vec![ModelKind::Restricted, ModelKind::Unrestricted]
}

/// One scenario as written in a JSON study config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "R")]
    pub removals: SchemeField,
    #[serde(rename = "T")]
    pub duration: DurationValue,
    pub alpha: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(rename = "B", default = "default_bootstrap")]
    pub bootstrap_draws: usize,
    #[serde(rename = "M", default = "default_importance")]
    pub importance_draws: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    pub seed: u64,
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
}

impl ScenarioConfig {
    /// Validates and converts the config into a runnable scenario.
    pub fn resolve<T: Real>(&self) -> Result<ScenarioSpec<T>> {
        let removals = self.removals.resolve(self.m)?;
        let duration = self.duration.resolve()?;
        let plan = CensoringPlan::new(
            self.n,
            self.m,
            removals,
            T::from_f64(duration).ok_or_else(|| {
                Error::InvalidParameter("duration does not fit the scalar type".into())
            })?,
        )?;
        let name = self.name.clone().unwrap_or_else(|| {
            format!(
                "{} T={} alpha={} lambda1={} lambda2={}",
                plan.scheme_label(),
                duration,
                self.alpha,
                self.lambda1,
                self.lambda2
            )
        });
        let from = |v: f64, what: &str| -> Result<T> {
            let x = T::from_f64(v)
                .ok_or_else(|| Error::InvalidParameter(format!("{what} not representable")))?;
            if !(x.is_finite() && x > T::zero()) {
                return Err(Error::InvalidParameter(format!(
                    "{what} must be finite and strictly positive, got {v}"
                )));
            }
            Ok(x)
        };
        let spec = ScenarioSpec {
            name,
            plan,
            alpha: from(self.alpha, "alpha")?,
            lambda1: from(self.lambda1, "lambda1")?,
            lambda2: from(self.lambda2, "lambda2")?,
            models: self.models.clone(),
            replications: self.reps,
            bootstrap_draws: self.bootstrap_draws,
            importance_draws: self.importance_draws,
            level: T::from_f64(self.level)
                .ok_or_else(|| Error::InvalidParameter("level not representable".into()))?,
            seed: self.seed,
            priors: Priors::default(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// A validated, runnable scenario.
#[derive(Debug, Clone)]
pub struct ScenarioSpec<T> {
    pub name: String,
    pub plan: CensoringPlan<T>,
    pub alpha: T,
    pub lambda1: T,
    pub lambda2: T,
    pub models: Vec<ModelKind>,
    pub replications: usize,
    pub bootstrap_draws: usize,
    pub importance_draws: usize,
    /// Nominal confidence level of every interval, e.g. 0.95.
    pub level: T,
    pub seed: u64,
    pub priors: Priors<T>,
}

impl<T: Real> ScenarioSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::Precondition(
                "a scenario needs at least one replication".into(),
            ));
        }
        if !(self.level > T::zero() && self.level < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "level must lie in (0, 1), got {}",
                self.level
            )));
        }
        if self.bootstrap_draws < 2 {
            return Err(Error::Precondition(
                "a scenario needs at least 2 bootstrap resamples".into(),
            ));
        }
        if self.importance_draws < 2 {
            return Err(Error::Precondition(
                "a scenario needs at least 2 importance draws".into(),
            ));
        }
        if self.models.is_empty() {
            return Err(Error::Precondition(
                "a scenario needs at least one model family".into(),
            ));
        }
        let mut seen = self.models.clone();
        seen.dedup();
        if seen.len() != self.models.len() {
            return Err(Error::Precondition(
                "model families must be listed at most once".into(),
            ));
        }
        self.priors.validate()?;
        for (v, what) in [
            (self.alpha, "alpha"),
            (self.lambda1, "lambda1"),
            (self.lambda2, "lambda2"),
        ] {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::InvalidParameter(format!(
                    "{what} must be finite and strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    fn truth(&self, functional: Functional) -> T {
        match functional {
            Functional::Alpha => self.alpha,
            Functional::Lambda1 => self.lambda1,
            Functional::Lambda2 => self.lambda2,
            Functional::Beta => self.lambda2 / self.lambda1,
        }
    }
}

/// The functionals a model family reports in the study tables.
pub fn monitored_functionals(model: ModelKind) -> &'static [Functional] {
    match model {
        ModelKind::Restricted => &[
            Functional::Alpha,
            Functional::Lambda1,
            Functional::Lambda2,
            Functional::Beta,
        ],
        ModelKind::Unrestricted => &[Functional::Alpha, Functional::Lambda1, Functional::Lambda2],
    }
}

/// Aggregated metrics for one (model, parameter) cell of a scenario.
#[derive(Debug, Clone, Serialize)]
pub struct ParamMetrics {
    pub model: ModelKind,
    pub parameter: Functional,
    pub truth: f64,
    /// Mean error of the maximum likelihood estimate.
    pub mle_bias: f64,
    /// Mean squared error of the maximum likelihood estimate.
    pub mle_mse: f64,
    /// Mean error of the Bayes estimate.
    pub be_bias: f64,
    /// Mean squared error of the Bayes estimate.
    pub be_mse: f64,
    /// Coverage and average length, normal-bootstrap interval.
    pub cpb: f64,
    pub alb: f64,
    /// Coverage and average length, percentile interval.
    pub cpp: f64,
    pub alp: f64,
    /// Coverage and average length, symmetric credible interval.
    pub cps: f64,
    pub als: f64,
    /// Coverage and average length, highest-posterior-density interval.
    pub cph: f64,
    pub alh: f64,
}

/// One scenario's aggregated results.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsRow {
    pub scenario: String,
    pub scheme: String,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "T")]
    pub duration: f64,
    pub alpha: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub level: f64,
    pub reps_requested: usize,
    pub reps_used: usize,
    pub failures: usize,
    /// Set when more than 5% of the replications failed.
    pub flagged: bool,
    pub params: Vec<ParamMetrics>,
}

/// Per-replication outcome for one (model, functional) cell.
struct RepEntry<T> {
    mle: T,
    be: T,
    intervals: [(bool, T); 4], // (covers, length): normal, percentile, symmetric, hpd
}

fn run_replication<T: Real>(spec: &ScenarioSpec<T>, replication: u64) -> Result<Vec<RepEntry<T>>> {
    let key = StreamKey::new(spec.seed, replication);
    let mut generation = key.generation();
    let sample = generate_sample(
        &spec.plan,
        spec.alpha,
        spec.lambda1,
        spec.lambda2,
        &mut generation,
    )?;
    let gamma = T::one() - spec.level;
    let opts = FitOptions::default();
    let mut entries = Vec::new();
    for &model in &spec.models {
        let restricted = model == ModelKind::Restricted;
        let fitted: FittedModel<T> = match model {
            ModelKind::Restricted => fit_restricted(&sample, &opts)?.fitted(),
            ModelKind::Unrestricted => fit_unrestricted(&sample, &opts)?.fitted(),
        };
        let run = bootstrap_mles(&spec.plan, &fitted, spec.bootstrap_draws, &key, &opts)?;
        let mut importance_rng = key.importance(restricted);
        let posterior = if restricted {
            draw_importance_restricted(
                &sample,
                &spec.priors,
                spec.importance_draws,
                &mut importance_rng,
            )?
        } else {
            draw_importance_unrestricted(
                &sample,
                &spec.priors,
                spec.importance_draws,
                &mut importance_rng,
            )?
        };
        for &functional in monitored_functionals(model) {
            let truth = spec.truth(functional);
            let draws = run.draws_for(functional);
            let normal = normal_bootstrap_interval(&draws, gamma)?;
            let pct = percentile_interval(&draws, gamma)?;
            let scri = symmetric_cri(&posterior, functional, gamma)?;
            let hpd = hpd_cri(&posterior, functional, gamma)?;
            entries.push(RepEntry {
                mle: fitted.value(functional),
                be: bayes_estimate_of(&posterior, functional)?,
                intervals: [
                    (normal.covers(truth), normal.length()),
                    (pct.covers(truth), pct.length()),
                    (scri.covers(truth), scri.length()),
                    (hpd.covers(truth), hpd.length()),
                ],
            });
        }
    }
    Ok(entries)
}

/// Runs one scenario: all replications in parallel over pre-assigned random
/// streams, aggregation in replication order (so results do not depend on the
/// worker count). Replications where any stage fails are excluded from every
/// metric symmetrically; more than 5% of them failing flags the row.
pub fn run_scenario<T: Real>(spec: &ScenarioSpec<T>) -> Result<MetricsRow> {
    spec.validate()?;
    let outcomes: Vec<Option<Vec<RepEntry<T>>>> = (0..spec.replications as u64)
        .into_par_iter()
        .map(|r| run_replication(spec, r).ok())
        .collect();

    // Per-replication entries are emitted in this fixed cell order.
    let cells: Vec<(ModelKind, Functional)> = spec
        .models
        .iter()
        .flat_map(|&model| {
            monitored_functionals(model)
                .iter()
                .map(move |&f| (model, f))
        })
        .collect();

    #[derive(Clone, Default)]
    struct Acc {
        err: f64,
        err_sq: f64,
        be_err: f64,
        be_err_sq: f64,
        cover: [f64; 4],
        length: [f64; 4],
    }
    let mut acc = vec![Acc::default(); cells.len()];
    let mut used = 0usize;
    for outcome in &outcomes {
        let Some(entries) = outcome else { continue };
        debug_assert_eq!(entries.len(), cells.len());
        used += 1;
        for ((slot, entry), &(_, functional)) in acc.iter_mut().zip(entries).zip(&cells) {
            let truth = spec.truth(functional).to_f64().unwrap_or(f64::NAN);
            let err = entry.mle.to_f64().unwrap_or(f64::NAN) - truth;
            let be_err = entry.be.to_f64().unwrap_or(f64::NAN) - truth;
            slot.err += err;
            slot.err_sq += err * err;
            slot.be_err += be_err;
            slot.be_err_sq += be_err * be_err;
            for (k, (covers, length)) in entry.intervals.iter().enumerate() {
                slot.cover[k] += if *covers { 1.0 } else { 0.0 };
                slot.length[k] += length.to_f64().unwrap_or(f64::NAN);
            }
        }
    }

    let failures = spec.replications - used;
    let denom = used as f64;
    let params = cells
        .iter()
        .zip(&acc)
        .map(|(&(model, parameter), a)| ParamMetrics {
            model,
            parameter,
            truth: spec.truth(parameter).to_f64().unwrap_or(f64::NAN),
            mle_bias: a.err / denom,
            mle_mse: a.err_sq / denom,
            be_bias: a.be_err / denom,
            be_mse: a.be_err_sq / denom,
            cpb: a.cover[0] / denom,
            alb: a.length[0] / denom,
            cpp: a.cover[1] / denom,
            alp: a.length[1] / denom,
            cps: a.cover[2] / denom,
            als: a.length[2] / denom,
            cph: a.cover[3] / denom,
            alh: a.length[3] / denom,
        })
        .collect();

    Ok(MetricsRow {
        scenario: spec.name.clone(),
        scheme: spec.plan.scheme_label(),
        n: spec.plan.n,
        m: spec.plan.m,
        duration: spec.plan.duration.to_f64().unwrap_or(f64::NAN),
        alpha: spec.alpha.to_f64().unwrap_or(f64::NAN),
        lambda1: spec.lambda1.to_f64().unwrap_or(f64::NAN),
        lambda2: spec.lambda2.to_f64().unwrap_or(f64::NAN),
        level: spec.level.to_f64().unwrap_or(f64::NAN),
        reps_requested: spec.replications,
        reps_used: used,
        failures,
        flagged: failures * 20 > spec.replications,
        params,
    })
}

/// Runs a whole study: one row per scenario, in input order.
pub fn run_study<T: Real>(specs: &[ScenarioSpec<T>]) -> Result<Vec<MetricsRow>> {
    if specs.is_empty() {
        return Err(Error::Precondition("a study needs at least one scenario".into()));
    }
    specs.iter().map(run_scenario).collect()
}

/// Output format for rendered study tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TableFormat::Csv),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            other => Err(Error::Parse(format!(
                "unknown table format \"{other}\" (expected csv or markdown)"
            ))),
        }
    }
}

/// Renders study rows with three decimal places.
pub fn render_table(rows: &[MetricsRow], format: TableFormat) -> Result<String> {
    render_table_with_precision(rows, format, 3)
}

/// Renders study rows as CSV or per-scenario markdown tables.
///
/// The metric columns follow the fixed order: Bias, MSE (likelihood), CPB,
/// ALB, CPP, ALP, then Bias, MSE (Bayes), CPS, ALS, CPH, ALH.
pub fn render_table_with_precision(
    rows: &[MetricsRow],
    format: TableFormat,
    precision: usize,
) -> Result<String> {
    match format {
        TableFormat::Csv => render_csv(rows, precision),
        TableFormat::Markdown => Ok(render_markdown(rows, precision)),
    }
}

const METRIC_HEADERS: [&str; 12] = [
    "bias_mle", "mse_mle", "cpb", "alb", "cpp", "alp", "bias_be", "mse_be", "cps", "als", "cph",
    "alh",
];

fn metric_values(p: &ParamMetrics) -> [f64; 12] {
    [
        p.mle_bias, p.mle_mse, p.cpb, p.alb, p.cpp, p.alp, p.be_bias, p.be_mse, p.cps, p.als,
        p.cph, p.alh,
    ]
}

fn fmt(v: f64, precision: usize) -> String {
    if v.is_finite() {
        format!("{v:.precision$}")
    } else {
        format!("{v}")
    }
}

fn render_csv(rows: &[MetricsRow], precision: usize) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "scenario", "scheme", "n", "m", "T", "level", "model", "parameter", "truth",
    ];
    header.extend(METRIC_HEADERS);
    header.extend(["reps_requested", "reps_used", "failures", "flagged"]);
    writer
        .write_record(&header)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    for row in rows {
        for p in &row.params {
            let mut record = vec![
                row.scenario.clone(),
                row.scheme.clone(),
                row.n.to_string(),
                row.m.to_string(),
                fmt(row.duration, precision),
                fmt(row.level, precision),
                p.model.to_string(),
                p.parameter.to_string(),
                fmt(p.truth, precision),
            ];
            record.extend(metric_values(p).iter().map(|v| fmt(*v, precision)));
            record.extend([
                row.reps_requested.to_string(),
                row.reps_used.to_string(),
                row.failures.to_string(),
                row.flagged.to_string(),
            ]);
            writer
                .write_record(&record)
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(format!("rendered CSV is not UTF-8: {e}")))
}

fn render_markdown(rows: &[MetricsRow], precision: usize) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str(&format!(
            "### {} (n={}, m={}, scheme={}, T={}, level={})\n\n",
            row.scenario,
            row.n,
            row.m,
            row.scheme,
            fmt(row.duration, precision),
            fmt(row.level, precision),
        ));
        out.push_str(&format!(
            "Replications: {} used of {} requested ({} failed{})\n\n",
            row.reps_used,
            row.reps_requested,
            row.failures,
            if row.flagged { "; FLAGGED >5%" } else { "" }
        ));
        out.push_str(
            "| Model | Parameter | Truth | Bias | MSE | CPB | ALB | CPP | ALP | Bias | MSE | CPS | ALS | CPH | ALH |\n",
        );
        out.push_str(
            "|---|---|---|---|---|---|---|---|---|---|---|---|---|---|---|\n",
        );
        for p in &row.params {
            out.push_str(&format!(
                "| {} | {} | {} |",
                p.model,
                p.parameter,
                fmt(p.truth, precision)
            ));
            for v in metric_values(p) {
                out.push_str(&format!(" {} |", fmt(v, precision)));
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// The 24-scenario factorial design used in the headline tables: n=50, m=40;
/// three removal schemes; two ideal durations; two shapes; two scale pairs.
/// Seeds are fixed per scenario so the grid is reproducible.
pub fn factorial_grid() -> Vec<ScenarioConfig> {
    let mut configs = Vec::with_capacity(24);
    let mut index = 0u64;
    for scheme in ["right:10", "fsp:10", "osp:10"] {
        for t in [0.25, 0.75] {
            for alpha in [0.5, 1.5] {
                for (lambda1, lambda2) in [(1.2, 1.0), (1.4, 1.0)] {
                    index += 1;
                    configs.push(ScenarioConfig {
                        name: Some(format!(
                            "{scheme} T={t} alpha={alpha} lambda=({lambda1},{lambda2})"
                        )),
                        n: 50,
                        m: 40,
                        removals: SchemeField::Text(scheme.to_string()),
                        duration: DurationValue::Number(t),
                        alpha,
                        lambda1,
                        lambda2,
                        reps: default_reps(),
                        bootstrap_draws: default_bootstrap(),
                        importance_draws: default_importance(),
                        level: default_level(),
                        seed: 101 + index,
                        models: default_models(),
                    });
                }
            }
        }
    }
    configs
}
