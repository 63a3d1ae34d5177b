use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("arity mismatch: expected {expected}, got {actual}")]
    ArityMismatch { expected: &'static str, actual: usize },

    #[error("enumeration of 2^{bits} cases refused: arity*n must not exceed {cap} (at most 2^{cap} cases)")]
    EnumerationCap { bits: usize, cap: usize },

    #[error("{what} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("settings cannot be sampled jointly: {0}")]
    NonCommuting(String),

    #[error("invalid experiment: {0}")]
    InvalidSpec(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("fit refused: {0}")]
    FitRefused(String),

    /// An algebraic identity failed. Never expected; signals a defect.
    #[error("identity violated (defect): {0}")]
    IdentityViolated(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_defect(&self) -> bool {
        matches!(self, Error::IdentityViolated(_))
    }

    pub(crate) fn check_range(what: &'static str, value: f64, min: f64, max: f64) -> Result<()> {
        if value.is_nan() || value < min || value > max {
            return Err(Error::OutOfRange {
                what,
                value,
                min,
                max,
            });
        }
        Ok(())
    }
}
