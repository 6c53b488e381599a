use thiserror::Error;

/// Errors raised by the sensor model, the modulator and the analysis code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("model invalid: {0}")]
    ModelInvalid(String),

    #[error("analysis: {0}")]
    Analysis(String),

    #[error("config: {0}")]
    Config(String),

    #[error("bit-stream format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
