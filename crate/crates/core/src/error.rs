use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A malformed record in a line-oriented input file.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate id `{id}` (line {line})")]
    DuplicateId { id: String, line: usize },

    #[error("{field} = {value} is outside [0, 1] for id `{id}`")]
    OutOfRange {
        id: String,
        field: &'static str,
        value: f64,
    },

    #[error("invalid alignment: {0}")]
    Alignment(String),

    #[error("invalid template: {0}")]
    Template(String),

    #[error("slots not found in source: {}", .0.join(", "))]
    SlotNotFound(Vec<String>),

    #[error("expected {expected} fillers, got {actual}")]
    FillerCount { expected: usize, actual: usize },

    #[error("missing ids: {}", .0.join(", "))]
    MissingIds(Vec<String>),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("all differences are zero; the test carries no information")]
    NoInformation,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A postcondition that the library itself is supposed to guarantee did not hold.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
