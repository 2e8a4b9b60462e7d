use thiserror::Error;

/// Errors raised by builders, designers and propagators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid transform: {0}")]
    InvalidTransform(String),

    #[error("time {t} is outside the pulse window [{start}, {end}]")]
    OutsideWindow { t: f64, start: f64, end: f64 },

    #[error("mixing angle is undefined when both pulses vanish")]
    UndefinedAngle,

    #[error(
        "norm drift {drift:.3e} exceeds {limit:.1e}; retry with at least {suggested_steps} steps"
    )]
    StepSize {
        drift: f64,
        limit: f64,
        suggested_steps: usize,
    },

    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
