use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}:{line}: duplicate element {value}")]
    Duplicate {
        path: PathBuf,
        line: usize,
        value: u64,
    },

    #[error("{path}:{line}: element {value} is not larger than its predecessor {prev}")]
    Unsorted {
        path: PathBuf,
        line: usize,
        value: u64,
        prev: u64,
    },

    #[error("{path}:{line}: negative element {value}")]
    Negative {
        path: PathBuf,
        line: usize,
        value: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A textual argument (number, list, range) that does not parse.
    #[error("cannot parse {0}")]
    Syntax(String),

    /// The requested bound needs membership information the truncated set does not carry.
    #[error("bound {requested} exceeds the set truncation limit {limit}")]
    BeyondTruncation { requested: u64, limit: u64 },

    #[error("series order {have} is below the required order {need}")]
    OrderTooSmall { have: usize, need: usize },

    #[error("generating-function coefficient at n = {n} is {value}, expected a non-negative integer")]
    NotACount { n: usize, value: String },

    #[error("quadrature with {q} nodes cannot integrate degree {degree} exactly (need at least {need})")]
    QuadratureTooCoarse { q: usize, degree: usize, need: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by violated preconditions rather than malformed input.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::BeyondTruncation { .. }
                | Error::OrderTooSmall { .. }
                | Error::QuadratureTooCoarse { .. }
                | Error::InvalidParameter(_)
        )
    }
}
