use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid thesaurus: {0}")]
    Thesaurus(String),

    #[error("duplicate pmid {0:?}")]
    DuplicatePmid(String),

    #[error("unknown descriptor {0:?}")]
    UnknownDescriptor(String),

    #[error("unknown pmid {0:?}")]
    UnknownPmid(String),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("{0}")]
    EmptyInput(String),

    #[error("matrix columns {found:?} do not match fitted columns {expected:?}")]
    ColumnMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("degenerate label {0:?}: needs both positive and negative valid instances")]
    DegenerateLabel(String),

    #[error("missing model for seed {0}")]
    MissingSeed(u64),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by input data (missing or malformed files,
    /// inconsistent records), as opposed to invalid arguments.
    pub fn is_data_error(&self) -> bool {
        !matches!(
            self,
            Error::InvalidArgument(_) | Error::ColumnMismatch { .. } | Error::MissingSeed(_)
        )
    }
}
