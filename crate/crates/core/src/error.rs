use thiserror::Error;

/// Errors raised while validating inputs or running a scenario.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("infeasible reference: {0}")]
    Infeasible(String),

    #[error("numerical divergence at step {step} (t = {time_s:.6} s): {what}")]
    Divergence { step: u64, time_s: f64, what: String },

    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("config serialization error: {0}")]
    Serialize(#[from] toml::ser::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
