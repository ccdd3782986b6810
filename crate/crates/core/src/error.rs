use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("duplicate id {0}")]
    DuplicateId(String),

    #[error("dangling reference {paper}→{entity}")]
    DanglingReference { paper: String, entity: String },

    #[error("invalid record {id}: {reason}")]
    InvalidRecord { id: String, reason: String },

    #[error("unknown paper {0}")]
    UnknownPaper(String),

    #[error("unknown entity {0}")]
    UnknownEntity(String),

    #[error("empty canonical form for {0:?}")]
    EmptyCanonicalForm(String),

    #[error("cannot merge {a} and {b}: entity kinds differ")]
    KindMismatch { a: String, b: String },

    #[error("entity id mismatch: expected {expected}, got {actual}")]
    IdMismatch { expected: String, actual: String },

    #[error("undefined recall: gold set is empty")]
    UndefinedRecall,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("degenerate projection: zero vector")]
    DegenerateProjection,

    #[error("degenerate embedding: zero vector for input {0}")]
    DegenerateEmbedding(usize),

    #[error("regularizer undefined: batch size 1 with λ > 0")]
    RegularizerUndefined,

    #[error("non-finite loss at epoch {epoch}, batch {batch}: {value}")]
    NonFiniteLoss { epoch: usize, batch: usize, value: f64 },

    #[error("empty query after tokenization")]
    EmptyQuery,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("provider error: {0}")]
    Provider(String),

    #[error("{context} {path}: {source}")]
    Io {
        context: &'static str,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad file format {path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

impl Error {
    pub fn io(context: &'static str, path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { context, path: path.into(), source }
    }

    /// Whether the failure came from a model provider rather than from the data.
    pub fn is_provider(&self) -> bool {
        matches!(self, Error::Provider(_))
    }
}
