//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or unsupported WAV input.
    #[error("wav: {0}")]
    Wav(String),

    /// A label file line that could not be parsed or violates an invariant.
    #[error("label file line {line}: {msg}")]
    Label { line: usize, msg: String },

    /// A precondition or shape contract violation on an in-memory input.
    #[error("{0}")]
    InvalidInput(String),

    /// Configuration that cannot be honored (bad field values, unknown names).
    #[error("config: {0}")]
    Config(String),

    /// Training failed (empty data, divergence).
    #[error("training: {0}")]
    Training(String),

    /// Feature cache corruption or version mismatch.
    #[error("cache: {0}")]
    Cache(String),

    /// Checkpoint container problems.
    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable kind tag, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Wav(_) => "wav",
            Error::Label { .. } => "label",
            Error::InvalidInput(_) => "invalid_input",
            Error::Config(_) => "config",
            Error::Training(_) => "training",
            Error::Cache(_) => "cache",
            Error::Checkpoint(_) => "checkpoint",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
