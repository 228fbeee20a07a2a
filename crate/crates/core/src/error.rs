use std::fmt;

/// A single invalid configuration field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("{path}:{line}: duplicate sample id `{id}`")]
    DuplicateId { path: String, line: u64, id: String },
    #[error("sample id `{0}` is present in X but missing from Y")]
    MissingTarget(String),
    #[error("sample id `{0}` is present in Y but missing from X")]
    UnmatchedTarget(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("zero variance: {0}")]
    ZeroVariance(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}: {message}")]
    NonFinite {
        epoch: usize,
        batch: usize,
        message: String,
    },
    #[error("run {run}, fold {fold}: {source}")]
    Fold {
        run: usize,
        fold: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid configuration:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<FieldError>),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config(vec![FieldError {
            field: field.into(),
            message: message.into(),
        }])
    }
}

pub type Result<T> = std::result::Result<T, Error>;
