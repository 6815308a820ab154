use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("{0}: no rating records found")]
    EmptyInput(PathBuf),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{kind} index {index} out of range (size {len})")]
    IndexOutOfRange { kind: &'static str, index: usize, len: usize },

    #[error("normal matrix for {side} {index} is singular; use a regularization coefficient > 0")]
    Singular { side: &'static str, index: usize },

    #[error("the {0} split is empty")]
    EmptySplit(&'static str),

    #[error("cutoff M = {cutoff} exceeds the {candidates} candidate items for user {user}")]
    CutoffTooLarge { cutoff: usize, candidates: usize, user: usize },

    #[error("model container: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
