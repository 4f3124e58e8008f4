use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter failed validation at construction time.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The operation is not defined for this configuration (e.g. an infinite cell).
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// A caller-side precondition was not met (e.g. too few Monte Carlo trials).
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// An iterative method stopped before reaching its tolerance.
    #[error("numeric failure: {message} (achieved {achieved:e})")]
    Numeric { message: String, achieved: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
