use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("price {phi} outside the action space [0, {phi_h}]")]
    Domain { phi: f64, phi_h: f64 },

    #[error("f({phi}) = {value} is not a valid acceptance probability")]
    NonPositive { phi: f64, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("truncation too small: omitted mass {omitted:e} exceeds {limit:e}")]
    TruncationTooSmall { omitted: f64, limit: f64 },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("QoS gap is not monotone in the split (g({lo}) = {g_lo}, g({hi}) = {g_hi})")]
    MonotonicityViolation { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("{0} is not strictly decreasing on the sampled grid")]
    NotDecreasing(String),

    #[error("trajectory too short: need more than {burn_in} points, have {len}")]
    InsufficientLength { burn_in: usize, len: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
