use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its type invariant; `field` is a dotted path.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("non-finite input `{what}` = {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("agent index {index} out of range for population of {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("no capacity is defined for this model")]
    NoCapacity,

    #[error("trajectory diverged at iteration {iteration}: {reason}")]
    Diverged { iteration: usize, reason: String },

    #[error("discrete best responses did not settle within {rounds} rounds")]
    NoDiscreteFixedPoint { rounds: usize },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
