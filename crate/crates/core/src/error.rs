//! Error taxonomy shared by the whole engine.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    /// A precondition on arguments or configuration failed.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A numerical routine could not produce a trustworthy result.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    /// Too little usable data for the requested analysis.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl EngineError {
    /// The message without the category prefix, for callers that wrap it in
    /// their own context.
    pub fn message(&self) -> &str {
        match self {
            EngineError::InvalidArgument(m)
            | EngineError::NumericalFailure(m)
            | EngineError::InsufficientData(m) => m,
        }
    }
}

pub type Result<T> = std::result::Result<T, EngineError>;
