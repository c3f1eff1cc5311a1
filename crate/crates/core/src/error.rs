use thiserror::Error;

pub type Result<T> = std::result::Result<T, OrliczError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrliczError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid Orlicz function: {0}")]
    InvalidPhi(String),

    #[error("invalid probability space: {0}")]
    InvalidSpace(String),

    #[error("invalid random variable: {0}")]
    InvalidRandomVariable(String),

    #[error("invalid measure change: {0}")]
    InvalidMeasure(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("tolerance {0} is too small")]
    ToleranceTooSmall(f64),

    #[error("operation requires a convex Orlicz function")]
    NotConvex,

    #[error("operation requires a GA-convex Orlicz function")]
    NotGAConvex,

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("exhaustive grid search supports at most 4 outcomes, got {0}")]
    DimensionTooLarge(usize),
}
