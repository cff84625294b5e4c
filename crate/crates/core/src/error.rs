//! Error type shared by every stage of the pipeline.

use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error category, used by the CLI to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input content: malformed records, broken invariants, mismatched artifacts.
    Validation,
    /// Filesystem failures.
    Io,
    /// Bad arguments: degenerate ratios, impossible limits, empty grids.
    Usage,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate example id `{0}`")]
    DuplicateExample(String),

    #[error("example `{example_id}`: duplicate candidate id `{candidate_id}`")]
    DuplicateCandidate {
        example_id: String,
        candidate_id: String,
    },

    #[error("example `{example_id}`: gold id `{candidate_id}` is not in the candidate pool")]
    GoldNotInPool {
        example_id: String,
        candidate_id: String,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("{0}: missing fragment file")]
    MissingFragment(PathBuf),

    #[error("{0}: no candidate paragraph files")]
    EmptyParagraphs(PathBuf),

    #[error("labels reference unknown example `{0}`")]
    UnknownLabelExample(String),

    #[error("dataset is unlabeled: example `{0}` has no gold set")]
    Unlabeled(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient {kind} pairs: need {needed}, have {available}")]
    InsufficientPairs {
        kind: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("duplicate passage id `{0}`")]
    DuplicatePassage(String),

    #[error("passage `{0}` is not in the index")]
    UnknownPassage(String),

    #[error("index was built with analyzer {found}, current analyzer is {expected}")]
    AnalyzerMismatch { expected: String, found: String },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("empty scored list for example `{0}`")]
    EmptyScores(String),

    #[error("unknown example `{0}`")]
    UnknownExample(String),

    #[error("example `{0}` is missing from the run")]
    MissingExample(String),

    #[error("example id sets differ: {0}")]
    ExampleMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, line: usize, message: impl ToString) -> Self {
        Error::Malformed {
            path: path.into(),
            line,
            message: message.to_string(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } => ErrorClass::Io,
            Error::InvalidArgument(_) => ErrorClass::Usage,
            _ => ErrorClass::Validation,
        }
    }
}
