use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes do not line up.
    #[error("shape error in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    /// A value violates a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// A file was readable but its contents are malformed.
    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// An operation was invoked out of order (e.g. backward without forward).
    #[error("usage error: {0}")]
    Usage(String),

    /// Edge-wise KL is undefined when one side sums to zero.
    #[error("KL divergence undefined: {0} matrix has no positive entries")]
    UndefinedKl(&'static str),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
