use thiserror::Error;

use crate::objects::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("object failed validation:\n{0}")]
    Report(ValidationReport),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("strategy count {count} exceeds the configured cap {cap}")]
    CapExceeded { count: usize, cap: usize },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("serialization error: {0}")]
    Json(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
