use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("subsystem index {index} out of range for {count} subsystems")]
    SubsystemOutOfRange { index: usize, count: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("not a projector (idempotency defect {defect:.3e})")]
    NotAProjector { defect: f64 },

    #[error("marginals differ by {defect:.3e} (tolerance {tolerance:.1e})")]
    MarginalMismatch { defect: f64, tolerance: f64 },

    #[error("codomain dimension {codomain} too small for domain dimension {domain}")]
    CodomainTooSmall { domain: usize, codomain: usize },

    #[error("channel is not trace preserving (deviation {deviation:.3e})")]
    NotTracePreserving { deviation: f64 },

    #[error("support of q is not contained in support of p (index {index})")]
    SupportViolation { index: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("malformed behavior: {0}")]
    MalformedBehavior(String),

    #[error("no feasible point found (best residual {best_residual:.3e})")]
    NoFeasiblePoint { best_residual: f64 },

    #[error("transcript was rejected by parameter estimation")]
    RejectedTranscript,

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
