use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error("unsupported schema version {0:?}")]
    SchemaVersion(String),

    #[error("node {0:?} is not present in the embedding space")]
    KeyMissing(String),

    #[error("node {0:?} has no incident edge")]
    NoIncidentEdge(String),

    #[error("empty walk corpus")]
    EmptyCorpus,

    #[error("cosine distance is undefined for a zero vector")]
    ZeroVector,

    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),

    #[error("unrepresentable paper: none of its keywords are embedded")]
    Unrepresentable,

    #[error("node {0:?} is out of vocabulary")]
    OutOfVocabulary(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite loss at epoch {epoch}: {detail}")]
    NonFinite { epoch: usize, detail: String },

    #[error("infeasible synthetic spec: {0}")]
    Infeasible(String),

    #[error("id mismatch: {0}")]
    IdMismatch(String),

    #[error("missing artifact {artifact}: run {stage} first")]
    MissingArtifact { artifact: String, stage: &'static str },

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
