use thiserror::Error;

/// Errors raised by constructors, evaluators and analyzers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CeaError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A function or family was evaluated outside the set where it is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl CeaError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        CeaError::InvalidInput(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        CeaError::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, CeaError>;
