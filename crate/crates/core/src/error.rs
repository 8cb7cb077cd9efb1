use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("dates out of order at row {row}: {message}")]
    Ordering { row: usize, message: String },

    #[error("domain error at {location}: {message}")]
    Domain { location: String, message: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("incomplete data: {0}")]
    IncompleteData(String),

    #[error("degenerate regression: {0}")]
    Degenerate(String),

    #[error("collinear design: {0}")]
    Collinearity(String),

    #[error("ill-conditioned matrix: {0}")]
    Conditioning(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unstable system{}: {message}", replication.map(|r| format!(" (replication {r})")).unwrap_or_default())]
    Instability {
        message: String,
        replication: Option<usize>,
    },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
