use thiserror::Error;

/// Errors raised by the offloading laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument was outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An internal contract was violated by the caller.
    #[error("logic error: {0}")]
    Logic(String),

    /// An action outside the live action set {0..E} was requested.
    #[error("action {action} is masked (valid actions are 0..={max_valid})")]
    MaskViolation { action: usize, max_valid: usize },

    #[error("all actions are masked")]
    EmptyMask,

    /// Gradients or parameters contained NaN or infinity.
    #[error("non-finite value in {what} at index {index}: {value}")]
    NonFinite {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A checkpoint or replay file could not be decoded.
    #[error("format error: {0}")]
    Format(String),

    /// A persisted artifact was produced for an incompatible configuration.
    #[error("incompatible artifact: {0}")]
    Incompatible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}
