//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("episode is over; no further steps accepted")]
    EpisodeOver,

    #[error("validation error: {0}")]
    Validation(String),

    #[error("retrieval error: {0}")]
    Retrieval(String),

    #[error("scorer error: {0}")]
    Scorer(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("training aborted: {0}")]
    Training(String),

    #[error("reproducibility assertion failed: {0}")]
    Reproducibility(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
