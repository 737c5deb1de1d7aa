use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    InvalidCorpus(String),

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),

    #[error("{0}")]
    Shape(String),

    #[error("{0}")]
    Unsupported(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("{0}")]
    Degenerate(String),

    #[error("{0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input or configuration rather than a
    /// failure during computation.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Degenerate(_))
    }
}
