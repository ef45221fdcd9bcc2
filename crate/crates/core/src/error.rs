use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error in object `{object}`: {reason}")]
    Validation { object: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("database too large for oracle: {worlds} worlds exceed cap {cap}")]
    CapExceeded { worlds: u128, cap: u128 },

    #[error("lattice too large: {candidates} candidates exceed cap {cap}")]
    LatticeTooLarge { candidates: usize, cap: usize },

    #[error("unknown object `{0}`")]
    UnknownObject(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(object: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            object: object.into(),
            reason: reason.into(),
        }
    }

    /// True for the size-guard errors (oracle and lattice caps).
    pub fn is_cap_exceeded(&self) -> bool {
        matches!(
            self,
            Error::CapExceeded { .. } | Error::LatticeTooLarge { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
