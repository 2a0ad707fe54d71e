//! Crate-wide error type.

use std::fmt;
use std::io;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug)]
pub enum CoreError {
    /// Caller violated a documented precondition (bad argument value).
    InvalidArgument(String),
    /// Two images / tensors that must agree in shape do not.
    ShapeMismatch(String),
    /// A pixel or parameter value is NaN or infinite where finiteness is required.
    NonFinite(String),
    /// Malformed file contents (bad magic, truncation, header overflow).
    Format(String),
    /// A loss or gradient became NaN/Inf during optimization.
    NumericFailure(String),
    Io(io::Error),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
            CoreError::ShapeMismatch(m) => write!(f, "shape mismatch: {m}"),
            CoreError::NonFinite(m) => write!(f, "non-finite value: {m}"),
            CoreError::Format(m) => write!(f, "format error: {m}"),
            CoreError::NumericFailure(m) => write!(f, "numeric failure: {m}"),
            CoreError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for CoreError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CoreError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for CoreError {
    fn from(e: io::Error) -> Self {
        CoreError::Io(e)
    }
}
