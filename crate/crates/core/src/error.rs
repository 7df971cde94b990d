use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scalar argument outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch for {what}: expected {expected}, got {actual}")]
    Shape {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("optimizer diverged at epoch {epoch}: {detail}; try a smaller step size")]
    Divergence { epoch: usize, detail: String },

    #[error("numerical error: {0}")]
    Numerical(String),

    /// Malformed input file or config value.
    #[error("input format error in {source_name}: {detail}")]
    Format { source_name: String, detail: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn format(source_name: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Format {
            source_name: source_name.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Shape { .. } | Error::Unsupported(_) | Error::Format { .. } => 2,
            Error::Divergence { .. } | Error::Numerical(_) => 3,
            Error::Io { .. } => 4,
        }
    }
}

pub(crate) fn check_dim(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Shape {
            what,
            expected,
            actual,
        })
    }
}
