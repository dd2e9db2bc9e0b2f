use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },

    #[error("malformed config line {line}: `{content}`")]
    Malformed { line: usize, content: String },

    #[error("malformed override `{0}` (expected key=value)")]
    MalformedOverride(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("action catalog would hold {size} entries, above the cap of {cap}; use fewer devices or a factorized action space")]
    CatalogTooLarge { size: u128, cap: usize },

    #[error("action index {index} out of range for catalog of size {size}")]
    ActionOutOfRange { index: usize, size: usize },

    #[error("episode already finished after {0} intervals")]
    EpisodeFinished(usize),

    #[error("empty history")]
    EmptyHistory,

    #[error("training diverged at step {step}: non-finite loss {loss}")]
    Divergence { step: usize, loss: f64 },

    #[error("checkpoint not found: {0}")]
    MissingCheckpoint(PathBuf),

    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
}

impl SimError {
    pub(crate) fn invalid(key: &str, reason: impl Into<String>) -> Self {
        SimError::InvalidValue {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }
}
