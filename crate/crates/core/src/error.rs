use alloc::string::String;

/// Errors raised by model construction and the optimization pipeline.
///
/// Solver outcomes such as infeasibility are reported through
/// [`crate::conic::SolveStatus`], not through this type.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid mode: {0}")]
    InvalidMode(&'static str),

    #[error("malformed conic program: {0}")]
    MalformedProgram(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("problem too large: {0}")]
    SizeGuard(String),

    #[error("instance infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
