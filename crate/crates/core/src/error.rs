use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("duplicate document {url} in collection {collection}")]
    DuplicateDocument { collection: String, url: String },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("corrupt directory index: {0}")]
    CorruptIndex(String),

    #[error("unsupported directory index version {found:?}")]
    VersionMismatch { found: String },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("no eligible database for the request constraints")]
    NoEligibleDatabase,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable code, shared by the CLI and the HTTP API.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::NotFound(_) => "not_found",
            Error::DuplicateDocument { .. } => "duplicate_document",
            Error::Parse { .. } => "parse_error",
            Error::Io { .. } => "io_error",
            Error::InvalidState(_) => "invalid_state",
            Error::CorruptIndex(_) => "corrupt_index",
            Error::VersionMismatch { .. } => "version_mismatch",
            Error::InvalidQuery(_) => "invalid_query",
            Error::NoEligibleDatabase => "no_eligible_database",
        }
    }
}
