use thiserror::Error;

use crate::spectral::ModeIndex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An input violated a precondition of the operation (e.g. not in D0).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("analyticity radius too large: exponent {exponent:.3} at mode {mode:?} exceeds 700")]
    RadiusTooLarge { mode: ModeIndex, exponent: f64 },

    #[error("time {t} is past the schedule horizon {t_max}")]
    Horizon { t: f64, t_max: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
