use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the estimators and the data layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid study configuration: {0}")]
    InvalidStudy(String),

    #[error("study undefined: {0}")]
    StudyUndefined(String),

    #[error("insufficient degrees of freedom (n = {n}, rank = {rank})")]
    InsufficientDegreesOfFreedom { n: usize, rank: usize },

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("term `{0}` is not identified (dropped as collinear)")]
    NotIdentified(String),

    #[error("not enough donors: {0}")]
    NotEnoughDonors(String),

    #[error("unit-root test: {0}")]
    UnitRoot(String),

    #[error("missing indicator file {}", .0.display())]
    MissingIndicator(PathBuf),

    #[error("cache integrity: {0}")]
    Integrity(String),

    #[error("http: {0}")]
    Http(String),

    #[error("offline mode: {0}")]
    Offline(String),

    #[error("malformed provider response: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
