use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("invalid document: {0}")]
    InvalidDoc(String),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("missing label: {0}")]
    MissingLabel(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not positive definite (failing pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("topic count would exceed the hard cap of {0}")]
    TopicCap(usize),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("unsupported snapshot version: expected {expected}, found {found}")]
    SnapshotVersion { expected: u32, found: u32 },

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command line tool: 2 for configuration
    /// problems, 3 for data problems, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Domain(_) | Error::NotPositiveDefinite { .. } | Error::Numeric(_) | Error::TopicCap(_) => 4,
            Error::Parse { .. }
            | Error::Io { .. }
            | Error::InvalidDoc(_)
            | Error::EmptyCorpus
            | Error::MissingLabel(_)
            | Error::DimensionMismatch { .. }
            | Error::SnapshotVersion { .. }
            | Error::Snapshot(_) => 3,
        }
    }
}
