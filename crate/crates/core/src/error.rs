use thiserror::Error;

/// Errors from the signature layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SigError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("tensor is not group-like: scalar part {0} != 1")]
    NotGroupLike(f64),
}

/// Errors from ingestion, configuration and file formats.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid partition: {0}")]
    Partition(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("unsupported file format: {0}")]
    Format(String),
}

impl DataError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<serde_json::Error> for DataError {
    fn from(e: serde_json::Error) -> Self {
        DataError::Parse(e.to_string())
    }
}

impl From<SigError> for DataError {
    fn from(e: SigError) -> Self {
        DataError::Contract(e.to_string())
    }
}
