use thiserror::Error;

/// Errors raised across model construction, simulation and certification.
#[derive(Debug, Error)]
pub enum Error {
    /// A structural problem with the system definition or run parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input violates a documented invariant (generator rows, delay bounds, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// Query outside the range a value is defined on.
    #[error("out of range: {0}")]
    Range(String),

    /// A certificate step cannot be carried out with the given data.
    #[error("certificate error: {0}")]
    Certificate(String),

    /// The coefficient model is an opaque callback and cannot be bounded.
    #[error("unsupported for certification: {0}")]
    Unsupported(String),

    /// Monte Carlo estimation could not produce a value.
    #[error("estimation error: {0}")]
    Estimation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
