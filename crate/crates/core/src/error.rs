use thiserror::Error;

/// Errors raised by algebra construction and product evaluation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),
    #[error("invalid composition: {0}")]
    InvalidComposition(String),
    #[error("misuse: {0}")]
    Misuse(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("internal consistency violated: {0}")]
    InternalConsistency(String),
}

pub type Result<T, E = AlgebraError> = std::result::Result<T, E>;

pub(crate) fn shape_err(what: &str, left: impl std::fmt::Debug, right: impl std::fmt::Debug) -> AlgebraError {
    AlgebraError::Shape(format!("{what}: {left:?} vs {right:?}"))
}
