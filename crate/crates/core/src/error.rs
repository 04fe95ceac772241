use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("paths are not on the same time grid")]
    IncompatibleGrid,

    #[error("numeric overflow at step {step}")]
    NumericOverflow { step: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("missing series: {0}")]
    MissingSeries(&'static str),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("timestamps out of order at line {line}: {message}")]
    Ordering { line: u64, message: String },

    #[error("feature width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("unknown hyperparameter `{key}` for {algorithm}")]
    UnknownHyperparam { algorithm: String, key: String },

    #[error("assertion failed: {0}")]
    Assertion(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
