use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("group variable not binary: found {} distinct labels ({})", .0.len(), .0.join(", "))]
    NotBinary(Vec<String>),

    #[error("group `{0}` has no usable observations")]
    EmptyGroup(String),

    #[error("unsupported alpha {0}; supported levels are 0.01, 0.05, 0.10")]
    UnsupportedAlpha(f64),

    #[error("calibration record is for n=({expected_x}, {expected_y}) but data has n=({got_x}, {got_y})")]
    SizeMismatch {
        expected_x: usize,
        expected_y: usize,
        got_x: usize,
        got_y: usize,
    },

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error(
        "invalid filter `{0}`: expected <column><op><value> with op one of ==, !=, <=, >=, <, >"
    )]
    BadFilter(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
