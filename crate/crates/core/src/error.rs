//! Error type shared by every module in the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two inputs that must agree in dimension do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Not enough observations for the requested statistic.
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    /// A covariance matrix failed its Cholesky factorization
    /// (a pivot fell at or below 1e-12 times the largest diagonal entry).
    #[error("singular covariance: {0}")]
    SingularCovariance(String),

    /// An approximate degrees-of-freedom computation produced an unusable value.
    #[error("degenerate degrees of freedom: {0}")]
    DegenerateDof(String),

    /// A variance that must be positive is zero.
    #[error("zero variance: {0}")]
    ZeroVariance(String),

    /// An input collection that must be non-empty is empty.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Invalid data for a domain type (non-finite entries, too few rows, ...).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// A configuration value violates its invariants.
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    /// A scenario column has no method with positive power.
    #[error("degenerate scenario: {0}")]
    DegenerateScenario(String),

    /// A text input failed to parse; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A Monte Carlo replicate failed; nothing is skipped silently.
    #[error("replicate {replicate} failed: {source}")]
    ReplicateFailed {
        replicate: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_replicate(self, replicate: usize) -> Error {
        Error::ReplicateFailed {
            replicate,
            source: Box::new(self),
        }
    }
}
