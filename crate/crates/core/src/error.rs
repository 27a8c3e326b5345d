use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}:{line}: {message}")]
    MalformedRow {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}: {detail}")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        detail: String,
    },

    #[error("missing prerequisite file(s): {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingPrerequisite(Vec<PathBuf>),

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

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
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
