use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Hermite degree {degree} exceeds the supported cap {cap}")]
    UnsupportedDegree { degree: usize, cap: usize },

    #[error("grid mismatch: expected {expected} samples, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid half-width {ymax} does not cover the required |y| <= {required}")]
    GridTooNarrow { ymax: f64, required: f64 },

    #[error("solution diverged at s = {s}: {reason}")]
    Diverged { s: f64, reason: String },

    #[error("requested time is outside the simulated window: {0}")]
    OutsideWindow(String),

    #[error("record cannot be used for this check: {0}")]
    UnusableRecord(String),

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("bad value `{value}` for configuration key `{key}`")]
    BadValue { key: String, value: String },

    #[error("malformed input {path}: {reason}")]
    Malformed { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
