//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MaddnessError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("reference matrix has zero Frobenius norm")]
    ZeroNorm,

    #[error("all buckets are empty")]
    EmptyBuckets,

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("operator matrix not set; call set_operator before apply")]
    OperatorNotSet,

    #[error("bad magic bytes at start of model stream")]
    BadMagic,

    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),

    #[error("truncated model stream: need {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
}

pub type Result<T> = std::result::Result<T, MaddnessError>;
