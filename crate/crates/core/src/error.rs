use std::path::PathBuf;

use thiserror::Error;

use crate::model::AttributeGroup;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported format: {0}")]
    Unsupported(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("index {index} out of range (limit {limit})")]
    OutOfBounds { index: usize, limit: usize },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("insufficient data: need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("corrupt stream: {0}")]
    Corrupt(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("external codec failed: {0}")]
    External(String),

    #[error("{group} channel {channel}: {source}")]
    Channel {
        group: AttributeGroup,
        channel: usize,
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

    pub(crate) fn in_channel(self, group: AttributeGroup, channel: usize) -> Self {
        Error::Channel {
            group,
            channel,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
