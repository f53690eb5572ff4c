//! Error type shared across the harness.

use std::io;

/// Errors produced by matrix I/O, filtering, sampling, and metric computation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A file could not be parsed under the declared format.
    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// An underlying I/O failure, annotated with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    /// Inputs violate a documented precondition (out-of-range index,
    /// negative value, inconsistent configuration, ...).
    #[error("{0}")]
    Domain(String),

    /// Two inputs that must agree in shape or length do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A reference filter removed every cell or every gene.
    #[error("empty reference: {0}")]
    EmptyReference(String),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn parse(
        path: impl AsRef<std::path::Path>,
        line: usize,
        msg: impl Into<String>,
    ) -> Self {
        Error::Parse {
            path: path.as_ref().display().to_string(),
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
