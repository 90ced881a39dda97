use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A matrix or distribution failed one of its structural invariants.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Relative entropy is infinite because the support condition fails.
    #[error("relative entropy diverges: support of rho not contained in support of sigma (leak {leak:.3e})")]
    InfiniteDivergence { leak: f64 },

    #[error("conditional state undefined: outcome probability {0:.3e} is below threshold")]
    ZeroProbability(f64),

    #[error("inconsistent table: {0}")]
    InconsistentTable(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
