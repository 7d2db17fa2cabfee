use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("exponent p = {0} is outside the admissible range")]
    Exponent(f64),
    #[error("level {level} exceeds grid resolution {resolution}")]
    Level { level: u32, resolution: u32 },
    #[error("input is not centered (mean {0:e})")]
    NotCentered(f64),
    #[error("grid resolutions differ: {0} vs {1}")]
    Resolution(u32, u32),
    #[error("frequency {freq} aliases on a 2^{resolution} grid")]
    Aliasing { freq: String, resolution: u32 },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
