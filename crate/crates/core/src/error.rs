use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("I/O error on {path}: {source}")]
    IoPath {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// Malformed input. `line` is 1-based when known.
    #[error("format error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Format { line: Option<usize>, message: String },

    #[error("truncated input: {0}")]
    Truncated(String),

    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),

    #[error("invalid value: {0}")]
    Value(String),

    #[error("seed word `{0}` has no embedding")]
    MissingSeed(String),

    #[error("invalid remap entry `{from}` -> `{to}`: {reason}")]
    RemapTarget {
        from: String,
        to: String,
        reason: String,
    },

    #[error("duplicate entity id `{0}`")]
    DuplicateEntity(String),

    #[error("no vector for type word `{word}` of entity `{entity}`")]
    MissingWordVector { word: String, entity: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("label `{0}` not found")]
    MissingLabel(String),

    #[error("invalid document: {0}")]
    InvalidDocument(String),

    #[error("relation weight count {found} does not match K = {expected}")]
    RelationArity { expected: usize, found: usize },

    #[error("candidate product {product} exceeds exhaustive limit {limit}; use greedy-local inference")]
    Capacity { product: u128, limit: u128 },

    #[error("no valid training mentions")]
    EmptyTraining,

    #[error("prediction/gold alignment mismatch: {}", .0.join("; "))]
    Alignment(Vec<String>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn format(line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io_path(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::IoPath {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end:
    /// 2 for data errors, 3 for capacity errors. (1 is reserved for usage.)
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capacity { .. } => 3,
            Error::Config(_) => 1,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
