use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LabError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("dimension {dim} exceeds dense cap {cap}")]
    Size { dim: usize, cap: usize },

    #[error("no convergence after {iterations} iterations (best estimate {best}, residual {residual:e})")]
    Convergence {
        best: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("singular system")]
    Singular,

    #[error("invalid input: {0}")]
    Validation(String),
}

impl LabError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::Validation(msg.into())
    }
}
