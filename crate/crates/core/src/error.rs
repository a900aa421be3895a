use thiserror::Error;

pub type Result<T> = std::result::Result<T, IfmError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IfmError {
    #[error("sequence declares {expected} slots but carries {got}")]
    SlotCountMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("outside the domain of {what}: {reason}")]
    Domain { what: &'static str, reason: String },

    #[error("matrix is singular to working precision (|det| = {det:e})")]
    Singular { det: f64 },
}

impl IfmError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        IfmError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
