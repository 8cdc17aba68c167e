use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("document {0} has no title, abstract or full text")]
    EmptyDocument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("referential error: {0}")]
    Referential(String),
    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unknown author {0}")]
    UnknownAuthor(String),
    #[error("unknown concept {0}")]
    UnknownConcept(String),
    #[error("unknown agent {0}")]
    UnknownAgent(String),
    #[error("agent {0} is already registered")]
    DuplicateAgent(String),
    #[error("no viable plan: {0}")]
    NoViablePlan(String),
    #[error("malformed extraction: {0}")]
    MalformedExtraction(String),
    #[error("malformed verdict: {0}")]
    MalformedVerdict(String),
    #[error("malformed ranking: {0}")]
    MalformedRanking(String),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("insufficient corpus: {0}")]
    InsufficientCorpus(String),
    #[error("no path between {0} and {1}")]
    NoPath(String, String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("failed to bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

impl From<scimem_core::DenseError> for Error {
    fn from(e: scimem_core::DenseError) -> Self {
        match e {
            scimem_core::DenseError::DimensionMismatch { expected, found } => Error::DimensionMismatch { expected, found },
            other => Error::InvalidRequest(other.to_string()),
        }
    }
}

impl From<scimem_core::metrics::MetricError> for Error {
    fn from(e: scimem_core::metrics::MetricError) -> Self {
        use scimem_core::metrics::MetricError;
        match e {
            MetricError::LengthMismatch { .. } => Error::LengthMismatch(e.to_string()),
            MetricError::MalformedRanking { .. } => Error::MalformedRanking(e.to_string()),
        }
    }
}
