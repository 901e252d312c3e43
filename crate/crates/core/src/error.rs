use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigensolver did not converge after {iterations} iterations (off-diagonal residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    /// The input lies outside the region where a formula applies, e.g. a
    /// degenerate ground state.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{}:{line}: {message}", path.display())]
    Config {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::DimensionMismatch { .. } | Error::Config { .. } => 1,
            Error::NoConvergence { .. } | Error::Numeric(_) | Error::Domain(_) => 2,
            Error::Io { .. } => 3,
        }
    }
}
