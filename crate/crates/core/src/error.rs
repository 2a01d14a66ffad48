use alloc::string::String;

/// Errors raised by the reasoning pipeline and its numeric engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// A forward value became NaN or infinite. `op` names the first operation
    /// on the tape that produced one.
    #[error("non-finite value produced by `{op}`")]
    NonFinite { op: &'static str },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}
