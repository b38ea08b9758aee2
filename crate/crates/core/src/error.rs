use std::path::PathBuf;

use chrono::NaiveDateTime;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Runtime,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("duplicate timestamp {0}")]
    DuplicateTimestamp(NaiveDateTime),

    #[error("irregular spacing between {before} and {after}: expected 15 minutes")]
    Spacing {
        before: NaiveDateTime,
        after: NaiveDateTime,
    },

    #[error("day {0} is not fully covered by 96 intervals")]
    PartialDay(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("series grids do not match: {0}")]
    MismatchedGrid(String),

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("sequence has zero variance")]
    ZeroVariance,

    #[error("empty input: {0}")]
    Empty(String),

    #[error("feature arity mismatch: model expects {expected}, got {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("block length {0} does not divide 96")]
    BlockLength(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),


    #[error("bagging replicate {replicate} failed: {source}")]
    Replicate {
        replicate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("day {day}, stage `{stage}`: {source}")]
    Stage {
        day: usize,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported document version {found} (expected {expected})")]
    Version { expected: u32, found: u32 },

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

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Toml(_) | Error::Version { .. } => ErrorKind::Config,
            Error::MalformedRow { .. }
            | Error::MissingColumn(_)
            | Error::DuplicateTimestamp(_)
            | Error::Spacing { .. }
            | Error::PartialDay(_)
            | Error::MismatchedGrid(_)
            | Error::InsufficientHistory(_)
            | Error::Csv(_)
            | Error::Io { .. } => ErrorKind::Data,
            Error::Stage { source, .. } | Error::Replicate { source, .. } => source.kind(),
            _ => ErrorKind::Runtime,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn stage(day: usize, stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage {
            day,
            stage,
            source: Box::new(e),
        }
    }
}
