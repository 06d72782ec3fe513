use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("failed to parse {format}: {reason}")]
    Parse {
        format: &'static str,
        reason: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("denoiser `{name}` failed: {reason}")]
    Denoiser { name: String, reason: String },

    #[error(transparent)]
    Optimizer(#[from] crate::optim::OptimError),

    #[error("solver aborted at iteration {iteration}: {source}")]
    Solver {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(format: &'static str, reason: impl Into<String>) -> Self {
        Error::Parse {
            format,
            reason: reason.into(),
        }
    }
}
