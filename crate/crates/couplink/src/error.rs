use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input document.
    #[error("parse error: {0}")]
    Parse(String),

    /// Structurally valid input that violates a field constraint.
    #[error("validation error: {field}: {message}")]
    Validation { field: String, message: String },

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The constraints admit no solution of the requested size.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Exhaustive enumeration would exceed the subset cap.
    #[error("enumeration cap exceeded: {subsets} subsets > cap {cap}")]
    EnumerationCap { subsets: u128, cap: u64 },

    /// The merged system graph is not connected.
    #[error("disconnected system: {0}")]
    Disconnected(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
