use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum FnmfError {
    /// Malformed input file or record.
    #[error("format error at row {row}, column {column}: {message}")]
    Format {
        row: usize,
        column: usize,
        message: String,
    },

    /// A value or argument outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A NaN or infinity appeared during an iterative solve.
    #[error("numerical error at iteration {iteration} in {block} step: {message}")]
    Numerical {
        iteration: usize,
        block: &'static str,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl FnmfError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        FnmfError::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FnmfError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, FnmfError>;
