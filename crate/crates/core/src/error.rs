use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("payload kind does not match metric {0}")]
    PayloadKind(&'static str),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("ring id {rid} out of range for {rings} rings")]
    Encoding { rid: u64, rings: u64 },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("page {page} out of range ({count} pages)")]
    PageOutOfRange { page: u64, count: u64 },

    #[error("oracle mismatch: {0}")]
    OracleMismatch(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
