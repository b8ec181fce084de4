//! Common vocabulary for interval estimates produced by the bootstrap and
//! posterior machinery.

use serde::{Deserialize, Serialize};

use crate::likelihood::Functional;
use crate::real::Real;

/// Construction method of an interval estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntervalMethod {
    /// Bootstrap percentile interval.
    #[serde(rename = "percentile")]
    BootstrapPercentile,
    /// Bootstrap normal-approximation interval with bias correction.
    #[serde(rename = "normal-bootstrap")]
    BootstrapNormal,
    /// Symmetric credible interval from weighted posterior draws.
    #[serde(rename = "symmetric")]
    CredibleSymmetric,
    /// Highest-posterior-density credible interval.
    #[serde(rename = "hpd")]
    CredibleHpd,
}

impl IntervalMethod {
    pub fn name(self) -> &'static str {
        match self {
            IntervalMethod::BootstrapPercentile => "percentile",
            IntervalMethod::BootstrapNormal => "normal-bootstrap",
            IntervalMethod::CredibleSymmetric => "symmetric",
            IntervalMethod::CredibleHpd => "hpd",
        }
    }
}

impl std::fmt::Display for IntervalMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A two-sided interval estimate for one functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalEstimate<T> {
    pub functional: Functional,
    pub method: IntervalMethod,
    /// Nominal coverage level in (0, 1), e.g. 0.95.
    pub level: T,
    pub lower: T,
    pub upper: T,
}

impl<T: Real> IntervalEstimate<T> {
    /// Interval width `upper - lower`.
    pub fn length(&self) -> T {
        self.upper - self.lower
    }

    /// Whether the interval contains `value` (closed on both ends).
    pub fn covers(&self, value: T) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// Wire view of an interval estimate with `f64` endpoints. Bootstrap
/// intervals additionally carry the resample count and failure tally.
#[derive(Debug, Clone, Serialize)]
pub struct IntervalReport {
    pub functional: Functional,
    pub method: IntervalMethod,
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    #[serde(rename = "B", skip_serializing_if = "Option::is_none")]
    pub resamples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failures: Option<usize>,
}

impl IntervalReport {
    /// Attaches bootstrap run metadata to the report.
    pub fn with_bootstrap_counts(mut self, resamples: usize, failures: usize) -> Self {
        self.resamples = Some(resamples);
        self.failures = Some(failures);
        self
    }
}

impl<T: Real> From<&IntervalEstimate<T>> for IntervalReport {
    fn from(est: &IntervalEstimate<T>) -> Self {
        IntervalReport {
            functional: est.functional,
            method: est.method,
            level: est.level.to_f64().unwrap_or(f64::NAN),
            lower: est.lower.to_f64().unwrap_or(f64::NAN),
            upper: est.upper.to_f64().unwrap_or(f64::NAN),
            resamples: None,
            failures: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn methods_serialize_with_wire_names() {
        let v = serde_json::to_value([
            IntervalMethod::BootstrapPercentile,
            IntervalMethod::BootstrapNormal,
            IntervalMethod::CredibleSymmetric,
            IntervalMethod::CredibleHpd,
        ])
        .unwrap();
        assert_eq!(
            v,
            serde_json::json!(["percentile", "normal-bootstrap", "symmetric", "hpd"])
        );
    }

    #[test]
    fn report_carries_bootstrap_counts_only_when_attached() {
        let est = IntervalEstimate {
            functional: Functional::Lambda2,
            method: IntervalMethod::BootstrapPercentile,
            level: 0.95f64,
            lower: 0.5,
            upper: 1.5,
        };
        let bare = serde_json::to_value(IntervalReport::from(&est)).unwrap();
        assert!(bare.get("B").is_none());
        let full =
            serde_json::to_value(IntervalReport::from(&est).with_bootstrap_counts(500, 3)).unwrap();
        assert_eq!(full["B"], 500);
        assert_eq!(full["failures"], 3);
        assert_eq!(full["method"], "percentile");
        assert_eq!(full["functional"], "lambda2");
    }

    #[test]
    fn coverage_is_closed_on_both_ends() {
        let est = IntervalEstimate {
            functional: Functional::Alpha,
            method: IntervalMethod::BootstrapPercentile,
            level: 0.95f64,
            lower: 1.0,
            upper: 2.0,
        };
        assert!(est.covers(1.0));
        assert!(est.covers(2.0));
        assert!(est.covers(1.5));
        assert!(!est.covers(0.999999));
        assert_eq!(est.length(), 1.0);
    }
}
