use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TriageError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// A corpus or data file record that failed to parse. `record` is 1-based.
    #[error("record {record}: {message}")]
    Record { record: usize, message: String },

    #[error("record {id:?} is empty after cleaning")]
    EmptyText { id: String },

    #[error("duplicate email id {0:?}")]
    DuplicateId(String),

    #[error("invalid category config: {0}")]
    CategoryConfig(String),

    #[error("no email matched any category keyword")]
    NoMatches,

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("unknown category {0:?}")]
    UnknownCategory(String),

    #[error("category {0:?} has no samples")]
    EmptyCategory(String),

    #[error("category {category:?} has {count} sample(s); stratified split needs at least 2")]
    TooFewToSplit { category: String, count: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("non-binary value {value} in sample {sample}, feature {feature}")]
    NonBinary {
        sample: usize,
        feature: usize,
        value: f64,
    },

    #[error("training diverged: loss is NaN at epoch {epoch}")]
    NanLoss { epoch: usize },

    #[error("unsupported model format_version {found} (expected {expected})")]
    Version { found: String, expected: u32 },

    #[error("corrupt model artifact: {0}")]
    Artifact(String),

    #[error("template error: {0}")]
    Template(String),

    #[error("invalid thesaurus line {line}: {message}")]
    Thesaurus { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, TriageError>;

impl TriageError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        TriageError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        TriageError::InvalidArgument(msg.into())
    }
}
