use thiserror::Error;

/// Failures raised by the numerical kernel.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("support overflow: {0}")]
    SupportOverflow(String),
    #[error("scale {scale} below resolution guard {min}")]
    ResolutionTooFine { scale: f64, min: f64 },
    #[error("degenerate linear system: {0}")]
    DegenerateSystem(String),
    #[error("scale {scale} is not below 1/(2R) = {limit}")]
    ScaleTooLarge { scale: f64, limit: f64 },
    #[error("expected {expected} functions, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("series does not decay: {0}")]
    NotConvergent(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("parameter violation: {0}")]
    ParameterViolation(String),
}

impl Error {
    /// Process exit code used by the command line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::GridMismatch(_) | Error::SupportOverflow(_) | Error::ResolutionTooFine { .. } => 3,
            Error::NotConvergent(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
