use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate id \"{id}\"")]
    DuplicateId { id: String, line: usize },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("missing bundle for doc_id \"{doc_id}\"")]
    MissingBundle { doc_id: String },

    #[error("doc_id \"{doc_id}\": requested {requested} stochastic passes, {available} available")]
    PassShortfall {
        doc_id: String,
        available: usize,
        requested: usize,
    },

    #[error("missing embedding for id \"{id}\"")]
    MissingEmbedding { id: String },

    #[error("missing uncertainty value for id \"{id}\"")]
    MissingUncertainty { id: String },

    #[error("unknown doc_id \"{id}\"")]
    UnknownId { id: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },

    #[error("strategy {strategy} is not handled by the {module} module")]
    WrongModule {
        strategy: &'static str,
        module: &'static str,
    },

    #[error("covariance matrix is singular after regularization")]
    SingularCovariance,

    #[error("doc_id \"{doc_id}\": {source}")]
    Document {
        doc_id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_doc(doc_id: &str, source: Error) -> Self {
        match source {
            // already carries the id
            e @ (Error::Document { .. }
            | Error::MissingBundle { .. }
            | Error::PassShortfall { .. }
            | Error::MissingEmbedding { .. }
            | Error::MissingUncertainty { .. }) => e,
            other => Error::Document {
                doc_id: doc_id.to_owned(),
                source: Box::new(other),
            },
        }
    }

    /// True for errors caused by an input file not covering a required id.
    pub fn is_coverage(&self) -> bool {
        match self {
            Error::MissingBundle { .. }
            | Error::PassShortfall { .. }
            | Error::MissingEmbedding { .. }
            | Error::MissingUncertainty { .. } => true,
            Error::Document { source, .. } => source.is_coverage(),
            _ => false,
        }
    }
}
