use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the pipeline. Each maps onto a process exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] patchscore_core::Error),
    #[error("no index.csv in {0}")]
    MissingIndexFile(PathBuf),
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("line {line}: unknown label {value:?}")]
    UnknownLabel { line: u64, value: String },
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("network error: {0}")]
    Network(String),
    #[error("no prediction for test patch {0}")]
    MissingPrediction(String),
    #[error("prediction for unknown patch {0}")]
    UnknownPatch(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv { path: path.into(), source }
    }

    /// 1 validation, 2 I/O, 3 internal invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(_)
            | Error::MalformedRow { .. }
            | Error::UnknownLabel { .. }
            | Error::MissingPrediction(_)
            | Error::UnknownPatch(_)
            | Error::Invalid(_) => 1,
            Error::MissingIndexFile(_)
            | Error::MissingFile(_)
            | Error::Io { .. }
            | Error::Csv { .. }
            | Error::Decode { .. }
            | Error::Json { .. }
            | Error::Network(_) => 2,
            Error::Invariant(_) => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
