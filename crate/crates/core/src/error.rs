use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch at layer {layer}: expected {expected} columns, got {got}")]
    LayerShape {
        layer: usize,
        expected: usize,
        got: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("backward called without a cached train-mode forward pass")]
    NoForwardCache,

    #[error("validation error: {0}")]
    Validation(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Data,
    Numeric,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::LayerShape { .. }
            | Error::Shape(_)
            | Error::NoForwardCache
            | Error::Validation(_) => ErrorClass::Validation,
            Error::Numeric(_) => ErrorClass::Numeric,
            Error::Schema(_) | Error::Data(_) | Error::Io { .. } | Error::Json(_) | Error::Csv(_) => {
                ErrorClass::Data
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
