use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model parameter is outside the admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input arrays have the wrong length or structure.
    #[error("shape error: {0}")]
    Shape(String),

    /// The point does not have the phase required by the operation.
    #[error("classification error: {0}")]
    Classification(String),

    /// Composition enumeration would exceed the configured cap.
    #[error("support has {count} compositions, above the cap of {cap}")]
    TooLarge { count: u128, cap: u128 },

    /// An iterative method failed to converge.
    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// A quantity that must be nonzero vanished (for example a zero-width interval).
    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
