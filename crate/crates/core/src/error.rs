//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across the pipeline, from malformed inputs
/// to numerical breakdowns. Input problems and numerical problems are kept
/// in distinct variants so callers (the CLI in particular) can map them to
/// different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar argument is out of its domain (non-positive rate, level
    /// outside (0,1), and so on).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A censoring plan violates its structural identity.
    #[error("invalid censoring plan: {0}")]
    InvalidPlan(String),

    /// A sample violates one or more structural invariants. The message
    /// lists every violation found, not just the first.
    #[error("invalid sample: {0}")]
    InvalidSample(String),

    /// A data file does not match the expected schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// A field failed to parse.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// The sample cannot support the requested computation (fewer than two
    /// failures, a single distinct time, an empty cause class where one is
    /// required).
    #[error("degenerate sample: {0}")]
    Degenerate(String),

    /// The shape solver exhausted its iteration budget.
    #[error(
        "shape solver did not converge after {iterations} iterations \
         (last step {last_step:e}); iterate trace: {trace:?}"
    )]
    NonConvergence {
        iterations: usize,
        last_step: f64,
        trace: Vec<f64>,
    },

    /// An internal cross-check failed (for example a negative likelihood
    /// ratio beyond rounding noise).
    #[error("solver inconsistency: {0}")]
    SolverInconsistency(String),

    /// Importance weights collapsed (all zero or non-finite).
    #[error("degenerate importance weights: {0}")]
    WeightDegeneracy(String),

    /// The requested quantile resolution cannot be met by the draw count.
    #[error("insufficient resolution: {0}")]
    Resolution(String),

    /// More than half of the bootstrap refits failed.
    #[error("bootstrap refits failed for {failed} of {requested} resamples (over 50%)")]
    BootstrapFailures { failed: usize, requested: usize },

    /// A structural precondition of an operation was not met.
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let is_io = err.is_io_error();
        match err.into_kind() {
            csv::ErrorKind::Io(io) if is_io => Error::Io(io),
            kind => Error::Parse(format!("csv: {kind:?}")),
        }
    }
}
