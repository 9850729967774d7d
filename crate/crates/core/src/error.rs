use thiserror::Error;

/// Errors raised across the lab.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite activation at step {step}")]
    NonFiniteActivation { step: usize },

    #[error("window of {len} ticks is shorter than the receptive field ({required} ticks)")]
    WindowTooShort { len: usize, required: usize },

    #[error("stale cache: {0}")]
    StaleCache(String),

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("calibration: {0}")]
    Calibration(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config parse: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("config encode: {0}")]
    TomlEncode(#[from] toml::ser::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
