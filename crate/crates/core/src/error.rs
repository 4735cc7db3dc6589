use thiserror::Error;

/// Errors raised across the simulator, optimizers and experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("index error: {0}")]
    Index(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),

    #[error("mitigation error: {0}")]
    Mitigation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
