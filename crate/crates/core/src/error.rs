//! Error type shared by every stage of the pipeline.

use thiserror::Error;

/// Errors raised while ingesting, embedding, scoring or generating definitions.
#[derive(Debug, Error)]
pub enum Error {
    /// A corpus record could not be materialized. `line` is 1-based.
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("duplicate definition id {0:?}")]
    DuplicateId(String),

    #[error("corpus contains no definitions")]
    EmptyCorpus,

    #[error("unknown definition id {0:?}")]
    UnknownId(String),

    #[error("need at least {needed} ids, got {got}")]
    TooFewIds { needed: usize, got: usize },

    #[error("unknown candidate id {0:?}")]
    UnknownCandidate(String),

    /// Remote service unreachable, timed out, or answered with a non-2xx or malformed body.
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),

    #[error("dimension mismatch ({context}): expected {expected}, got {actual}")]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        context: String,
    },

    #[error("model mismatch: {left:?} vs {right:?}")]
    ModelMismatch { left: String, right: String },

    #[error("no embedding vector for id {0:?}")]
    MissingVector(String),

    /// Cosine similarity is undefined for an all-zero vector.
    #[error("zero vector for {0:?}")]
    ZeroVector(String),

    #[error("non-finite component in vector for {0:?}")]
    NonFinite(String),

    #[error("malformed embedding file: {0}")]
    MalformedFile(String),

    #[error("empty embedding set")]
    EmptySet,

    /// Self-exclusion removed every reference column for this candidate.
    #[error("no reference columns left for {0:?}")]
    EmptyReferenceSet(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed generation response: {0}")]
    MalformedResponse(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
