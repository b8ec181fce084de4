//! Adaptive progressive type-II censoring of competing-risks data.
//!
//! An experiment starts with `n` units and stops at the `m`-th failure.
//! A plan fixes removal counts `R_1..R_m` with `m + sum(R) = n`: after the
//! j-th failure, `R_j` surviving units are withdrawn at random. The scheme
//! adapts to an ideal duration `T`: removals follow the plan only while
//! failures occur at or before `T`; once `T` is passed no intermediate
//! removals happen, and whatever remains is removed at the m-th failure.
//! With `J` the number of failures at or before `T`, the effective counts
//! are
//!
//! ```text
//! R*_j = R_j                    for j <= J
//! R*_j = 0                      for J < j < m
//! R*_m = n - m - sum_{j<=J} R_j
//! ```
//!
//! Each unit fails from one of two latent Weibull causes sharing a common
//! shape; the observed pair is the minimum lifetime and its cause index.

use std::fmt;
use std::io::{BufRead, BufReader, Write as IoWrite};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::sampling::{sample_weibull, RngStream};

/// Failure cause label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cause {
    /// First latent cause (rate `lambda1`); wins ties.
    One,
    /// Second latent cause (rate `lambda2`).
    Two,
}

impl Cause {
    /// Numeric label used in data files: 1 or 2.
    pub fn label(self) -> u8 {
        match self {
            Cause::One => 1,
            Cause::Two => 2,
        }
    }

    /// Parses the numeric label 1 or 2.
    pub fn from_label(label: u8) -> Result<Self> {
        match label {
            1 => Ok(Cause::One),
            2 => Ok(Cause::Two),
            other => Err(Error::Parse(format!(
                "cause label must be 1 or 2, got {other}"
            ))),
        }
    }
}

/// Pre-specified censoring plan.
///
/// `duration` is the ideal test length `T`; `T = +inf` disables the adaptive
/// truncation so the plan is applied verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoringPlan<T> {
    /// Number of units on test.
    pub n: usize,
    /// Number of observed failures.
    pub m: usize,
    /// Planned removal counts `R_1..R_m`, summing with `m` to `n`.
    pub removals: Vec<usize>,
    /// Ideal test duration `T` (strictly positive, possibly infinite).
    pub duration: T,
}

impl<T: Real> CensoringPlan<T> {
    /// Validated constructor; rejects any violation of the plan identity.
    pub fn new(n: usize, m: usize, removals: Vec<usize>, duration: T) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidPlan("m must be at least 1".into()));
        }
        if m > n {
            return Err(Error::InvalidPlan(format!(
                "m = {m} exceeds the number of units n = {n}"
            )));
        }
        if removals.len() != m {
            return Err(Error::InvalidPlan(format!(
                "removal scheme has {} entries but m = {m}",
                removals.len()
            )));
        }
        let total: usize = removals.iter().sum();
        if m + total != n {
            return Err(Error::InvalidPlan(format!(
                "m + sum(R) must equal n: {m} + {total} != {n}"
            )));
        }
        if duration.is_nan() || duration <= T::zero() {
            return Err(Error::InvalidPlan(format!(
                "duration T must be strictly positive or +inf, got {duration}"
            )));
        }
        Ok(CensoringPlan {
            n,
            m,
            removals,
            duration,
        })
    }

    /// Conventional right censoring: all removals at the last failure.
    pub fn right_censoring(n: usize, m: usize, duration: T) -> Result<Self> {
        let mut removals = vec![0; m];
        if m > 0 {
            removals[m - 1] = n - m.min(n);
        }
        Self::new(n, m, removals, duration)
    }

    /// First-step plan: all removals at the first failure.
    pub fn first_step(n: usize, m: usize, duration: T) -> Result<Self> {
        let mut removals = vec![0; m];
        if m > 0 {
            removals[0] = n - m.min(n);
        }
        Self::new(n, m, removals, duration)
    }

    /// One-step plan: all removals at the middle failure (index `(m-1)/2`).
    pub fn one_step(n: usize, m: usize, duration: T) -> Result<Self> {
        let mut removals = vec![0; m];
        if m > 0 {
            removals[(m - 1) / 2] = n - m.min(n);
        }
        Self::new(n, m, removals, duration)
    }

    /// Short label for the removal pattern: the named plans render as
    /// `right:k`, `fsp:k`, or `osp:k`; anything else as the comma list.
    pub fn scheme_label(&self) -> String {
        let k: usize = self.removals.iter().sum();
        let m = self.m;
        let hot: Vec<usize> = (0..m).filter(|&j| self.removals[j] != 0).collect();
        if k > 0 && hot.len() == 1 {
            let j = hot[0];
            if j == m - 1 {
                return format!("right:{k}");
            }
            if j == 0 {
                return format!("fsp:{k}");
            }
            if j == (m - 1) / 2 {
                return format!("osp:{k}");
            }
        }
        if k == 0 {
            return "complete".into();
        }
        self.removals
            .iter()
            .map(|r| r.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Parses a removal-scheme description into the removal vector of a plan
/// with `m` observed failures out of `n` units.
///
/// Accepted forms: `right:k` (all `k` removals at the last failure),
/// `fsp:k` (all at the first), `osp:k` (all at the middle failure, index
/// `(m-1)/2`), or an explicit comma-separated list of `m` counts. The
/// resulting vector is validated by plan construction, not here.
pub fn parse_scheme(text: &str, m: usize) -> Result<Vec<usize>> {
    let t = text.trim();
    if m == 0 {
        return Err(Error::Parse(
            "a removal scheme needs at least one failure stage (m >= 1)".into(),
        ));
    }
    let named = |k: &str, hot: usize| -> Result<Vec<usize>> {
        let k: usize = k
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("removal count in scheme '{t}' is not a number")))?;
        let mut removals = vec![0; m];
        removals[hot] = k;
        Ok(removals)
    };
    if let Some(rest) = t.strip_prefix("right:") {
        return named(rest, m - 1);
    }
    if let Some(rest) = t.strip_prefix("fsp:") {
        return named(rest, 0);
    }
    if let Some(rest) = t.strip_prefix("osp:") {
        return named(rest, (m - 1) / 2);
    }
    let removals: Vec<usize> = t
        .split(',')
        .map(|part| {
            part.trim().parse().map_err(|_| {
                Error::Parse(format!(
                    "removal scheme entry '{}' is not a non-negative integer",
                    part.trim()
                ))
            })
        })
        .collect::<Result<_>>()?;
    if removals.len() != m {
        return Err(Error::Parse(format!(
            "removal scheme lists {} entries but the plan observes m = {m} failures",
            removals.len()
        )));
    }
    Ok(removals)
}

/// One observed sample: failure times with causes, plus the removal counts
/// actually applied.
#[derive(Debug, Clone, PartialEq)]
pub struct CompetingRisksSample<T> {
    /// Plan the sample was observed under.
    pub plan: CensoringPlan<T>,
    /// Failure times `x_1 < x_2 < ... < x_m`.
    pub times: Vec<T>,
    /// Cause of each failure.
    pub causes: Vec<Cause>,
    /// Effective removal counts `R*_1..R*_m`.
    pub effective_removals: Vec<usize>,
    /// Number of failures at or before the ideal duration (`J = m` when the
    /// experiment finished in time).
    pub change_index: usize,
}

impl<T: Real> CompetingRisksSample<T> {
    /// Validated constructor; collects every invariant violation before
    /// refusing.
    pub fn new(
        plan: CensoringPlan<T>,
        times: Vec<T>,
        causes: Vec<Cause>,
        effective_removals: Vec<usize>,
        change_index: usize,
    ) -> Result<Self> {
        let sample = CompetingRisksSample {
            plan,
            times,
            causes,
            effective_removals,
            change_index,
        };
        let violations = validate_sample(&sample);
        if violations.is_empty() {
            Ok(sample)
        } else {
            let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            Err(Error::InvalidSample(list.join("; ")))
        }
    }

    /// Number of observed failures.
    pub fn m(&self) -> usize {
        self.times.len()
    }

    /// Number of failures from the given cause.
    pub fn count(&self, cause: Cause) -> usize {
        self.causes.iter().filter(|&&c| c == cause).count()
    }

    /// Number of cause-1 failures.
    pub fn m1(&self) -> usize {
        self.count(Cause::One)
    }

    /// Number of cause-2 failures.
    pub fn m2(&self) -> usize {
        self.count(Cause::Two)
    }

    /// Failure times attributed to the given cause, in increasing order.
    pub fn times_for(&self, cause: Cause) -> Vec<T> {
        self.times
            .iter()
            .zip(&self.causes)
            .filter(|(_, &c)| c == cause)
            .map(|(&x, _)| x)
            .collect()
    }
}

/// A single structural defect found in a sample. Violations are data:
/// validation reports all of them rather than stopping at the first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    LengthMismatch { field: &'static str, len: usize, m: usize },
    NonPositiveTime { index: usize },
    NotStrictlyIncreasing { index: usize },
    RemovalSum { expected: usize, actual: usize },
    RemovalPattern { index: usize, expected: usize, actual: usize },
    ChangeIndex { expected: usize, actual: usize },
    Plan(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LengthMismatch { field, len, m } => {
                write!(f, "{field} has {len} entries but m = {m}")
            }
            Violation::NonPositiveTime { index } => {
                write!(f, "time at position {index} is not strictly positive")
            }
            Violation::NotStrictlyIncreasing { index } => {
                write!(f, "times are not strictly increasing at position {index}")
            }
            Violation::RemovalSum { expected, actual } => {
                write!(
                    f,
                    "effective removals sum to {actual}, expected n - m = {expected}"
                )
            }
            Violation::RemovalPattern {
                index,
                expected,
                actual,
            } => write!(
                f,
                "effective removal at position {index} is {actual}, \
                 adaptive scheme requires {expected}"
            ),
            Violation::ChangeIndex { expected, actual } => {
                write!(
                    f,
                    "change index is {actual} but {expected} failures lie at or before T"
                )
            }
            Violation::Plan(msg) => write!(f, "plan: {msg}"),
        }
    }
}

/// Checks every structural invariant of a sample and returns the full list
/// of violations (empty when the sample is valid).
pub fn validate_sample<T: Real>(sample: &CompetingRisksSample<T>) -> Vec<Violation> {
    let mut out = Vec::new();
    let plan = &sample.plan;
    if let Err(e) = CensoringPlan::new(
        plan.n,
        plan.m,
        plan.removals.clone(),
        plan.duration,
    ) {
        out.push(Violation::Plan(e.to_string()));
    }
    let m = plan.m;
    if sample.times.len() != m {
        out.push(Violation::LengthMismatch {
            field: "times",
            len: sample.times.len(),
            m,
        });
    }
    if sample.causes.len() != m {
        out.push(Violation::LengthMismatch {
            field: "causes",
            len: sample.causes.len(),
            m,
        });
    }
    if sample.effective_removals.len() != m {
        out.push(Violation::LengthMismatch {
            field: "effective removals",
            len: sample.effective_removals.len(),
            m,
        });
    }
    for (i, &x) in sample.times.iter().enumerate() {
        if !(x.is_finite() && x > T::zero()) {
            out.push(Violation::NonPositiveTime { index: i + 1 });
        }
        if i > 0 && !(x > sample.times[i - 1]) {
            out.push(Violation::NotStrictlyIncreasing { index: i + 1 });
        }
    }
    let total: usize = sample.effective_removals.iter().sum();
    if plan.n >= m && total != plan.n - m {
        out.push(Violation::RemovalSum {
            expected: plan.n - m,
            actual: total,
        });
    }
    // The remaining checks need consistent lengths.
    if sample.times.len() != m || sample.effective_removals.len() != m {
        return out;
    }
    let j = sample
        .times
        .iter()
        .filter(|&&x| x <= plan.duration)
        .count();
    if sample.change_index != j {
        out.push(Violation::ChangeIndex {
            expected: j,
            actual: sample.change_index,
        });
    }
    if let Ok(expected) = effective_scheme(plan, &sample.times) {
        for (i, (&got, &want)) in sample
            .effective_removals
            .iter()
            .zip(&expected)
            .enumerate()
        {
            if got != want {
                out.push(Violation::RemovalPattern {
                    index: i + 1,
                    expected: want,
                    actual: got,
                });
            }
        }
    }
    out
}

/// Effective removal counts implied by a plan and the observed failure
/// times.
///
/// A failure exactly at `T` counts as within the ideal duration. When every
/// failure is in time (`J = m`) the plan is returned unchanged.
pub fn effective_scheme<T: Real>(plan: &CensoringPlan<T>, times: &[T]) -> Result<Vec<usize>> {
    if times.len() != plan.m {
        return Err(Error::Precondition(format!(
            "expected {} failure times, got {}",
            plan.m,
            times.len()
        )));
    }
    for (i, &x) in times.iter().enumerate() {
        if !(x.is_finite() && x > T::zero()) {
            return Err(Error::Precondition(format!(
                "failure time at position {} must be finite and positive",
                i + 1
            )));
        }
        if i > 0 && !(x > times[i - 1]) {
            return Err(Error::Precondition(format!(
                "failure times must be strictly increasing (position {})",
                i + 1
            )));
        }
    }
    let m = plan.m;
    let j = times.iter().filter(|&&x| x <= plan.duration).count();
    if j == m {
        return Ok(plan.removals.clone());
    }
    let mut out = vec![0; m];
    let mut applied = 0;
    for i in 0..j {
        out[i] = plan.removals[i];
        applied += plan.removals[i];
    }
    out[m - 1] = plan.n - m - applied;
    Ok(out)
}

/// Generates one sample under the plan from latent Weibull causes with
/// common shape `alpha` and rates `lambda1`, `lambda2`.
///
/// Draw order is fixed for reproducibility: first the `n` latent pairs
/// (cause 1 then cause 2 per unit), then one index draw per randomly removed
/// survivor. Ties between latent causes go to cause 1. Removals at the final
/// failure take the whole remaining pool and consume no randomness.
pub fn generate_sample<T: Real>(
    plan: &CensoringPlan<T>,
    alpha: T,
    lambda1: T,
    lambda2: T,
    rng: &mut RngStream,
) -> Result<CompetingRisksSample<T>> {
    for (value, name) in [(alpha, "alpha"), (lambda1, "lambda1"), (lambda2, "lambda2")] {
        if !(value.is_finite() && value > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be finite and strictly positive, got {value}"
            )));
        }
    }
    let mut pool: Vec<(T, Cause)> = Vec::with_capacity(plan.n);
    for _ in 0..plan.n {
        let x1 = sample_weibull(rng, alpha, lambda1)?;
        let x2 = sample_weibull(rng, alpha, lambda2)?;
        if x1 <= x2 {
            pool.push((x1, Cause::One));
        } else {
            pool.push((x2, Cause::Two));
        }
    }

    let m = plan.m;
    let mut times = Vec::with_capacity(m);
    let mut causes = Vec::with_capacity(m);
    let mut effective = vec![0usize; m];
    for j in 0..m {
        let (idx, _) = pool
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.0.partial_cmp(&b.0).expect("finite lifetimes"))
            .expect("pool cannot be empty before the m-th failure");
        let (x, cause) = pool.swap_remove(idx);
        times.push(x);
        causes.push(cause);

        let k = if j + 1 == m {
            pool.len()
        } else if x <= plan.duration {
            plan.removals[j]
        } else {
            0
        };
        debug_assert!(k <= pool.len(), "plan identity guarantees feasibility");
        if j + 1 == m {
            pool.clear();
        } else {
            for _ in 0..k {
                let victim = rng.draw_index(pool.len());
                pool.swap_remove(victim);
            }
        }
        effective[j] = k;
    }

    let change_index = times.iter().filter(|&&x| x <= plan.duration).count();
    CompetingRisksSample::new(plan.clone(), times, causes, effective, change_index)
}

// --- file formats ----------------------------------------------------------

/// Sidecar representation of a plan; `T` is written as a number or `"inf"`.
#[derive(Serialize, Deserialize)]
struct PlanFile {
    n: usize,
    m: usize,
    #[serde(rename = "R")]
    removals: Vec<usize>,
    #[serde(rename = "T")]
    duration: DurationField,
}

/// JSON has no infinity literal, so an infinite duration round-trips as the
/// string `"inf"`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum DurationField {
    Number(f64),
    Text(String),
}

impl DurationField {
    pub(crate) fn from_value<T: Real>(value: T) -> Self {
        if value.is_infinite() {
            DurationField::Text("inf".into())
        } else {
            DurationField::Number(value.to_f64().unwrap_or(f64::NAN))
        }
    }

    pub(crate) fn to_value<T: Real>(&self) -> Result<T> {
        match self {
            DurationField::Number(x) => T::from_f64(*x)
                .ok_or_else(|| Error::Parse(format!("duration {x} not representable"))),
            DurationField::Text(s) if s.eq_ignore_ascii_case("inf") => Ok(T::infinity()),
            DurationField::Text(s) => {
                Err(Error::Parse(format!("duration must be a number or \"inf\", got {s:?}")))
            }
        }
    }
}

const CSV_HEADER: [&str; 4] = ["index", "time", "cause", "removed"];

/// Path of the JSON sidecar holding the plan for a sample CSV.
pub fn plan_sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("plan.json")
}

/// Writes a sample as CSV (`index,time,cause,removed`) plus a JSON plan
/// sidecar next to it. Times are written with 17 significant digits so the
/// round trip through [`read_sample`] reproduces them exactly.
pub fn write_sample<T: Real>(sample: &CompetingRisksSample<T>, csv_path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(csv_path)?;
    writer
        .write_record(CSV_HEADER)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    for (i, ((&x, &cause), &removed)) in sample
        .times
        .iter()
        .zip(&sample.causes)
        .zip(&sample.effective_removals)
        .enumerate()
    {
        writer
            .write_record([
                (i + 1).to_string(),
                format!("{x:.16e}"),
                cause.label().to_string(),
                removed.to_string(),
            ])
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    writer.flush()?;

    let plan_file = PlanFile {
        n: sample.plan.n,
        m: sample.plan.m,
        removals: sample.plan.removals.clone(),
        duration: DurationField::from_value(sample.plan.duration),
    };
    let mut f = std::fs::File::create(plan_sidecar_path(csv_path))?;
    let body = serde_json::to_string_pretty(&plan_file)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    writeln!(f, "{body}")?;
    Ok(())
}

/// Reads a sample written by [`write_sample`], restoring the plan from the
/// sidecar and re-validating every invariant.
pub fn read_sample<T: Real>(csv_path: &Path) -> Result<CompetingRisksSample<T>> {
    let sidecar = plan_sidecar_path(csv_path);
    let plan_text = std::fs::read_to_string(&sidecar).map_err(|e| {
        Error::Schema(format!(
            "cannot read plan sidecar {}: {e}",
            sidecar.display()
        ))
    })?;
    let plan_file: PlanFile = serde_json::from_str(&plan_text)
        .map_err(|e| Error::Schema(format!("malformed plan sidecar: {e}")))?;
    let plan = CensoringPlan::new(
        plan_file.n,
        plan_file.m,
        plan_file.removals,
        plan_file.duration.to_value()?,
    )?;

    let file = std::fs::File::open(csv_path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Schema("data file is empty".into()))??;
    let found: Vec<&str> = header.split(',').map(str::trim).collect();
    for expected in CSV_HEADER {
        if !found.contains(&expected) {
            return Err(Error::Schema(format!("missing column \"{expected}\"")));
        }
    }
    if found != CSV_HEADER {
        return Err(Error::Schema(format!(
            "columns must be exactly {CSV_HEADER:?}, got {found:?}"
        )));
    }

    let mut times = Vec::new();
    let mut causes = Vec::new();
    let mut removed = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::Schema(format!(
                "row {} has {} fields, expected 4",
                lineno + 2,
                fields.len()
            )));
        }
        let index: usize = fields[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad index {:?}", fields[0])))?;
        if index != times.len() + 1 {
            return Err(Error::Schema(format!(
                "row indices must be consecutive from 1, got {index} at row {}",
                lineno + 2
            )));
        }
        let time: T = fields[1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad time {:?}", fields[1])))?;
        let cause: u8 = fields[2]
            .parse()
            .map_err(|_| Error::Parse(format!("bad cause {:?}", fields[2])))?;
        let rem: usize = fields[3]
            .parse()
            .map_err(|_| Error::Parse(format!("bad removal count {:?}", fields[3])))?;
        times.push(time);
        causes.push(Cause::from_label(cause)?);
        removed.push(rem);
    }

    let change_index = times.iter().filter(|&&x| x <= plan.duration).count();
    CompetingRisksSample::new(plan, times, causes, removed, change_index)
}
