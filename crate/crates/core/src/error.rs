use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("configuration has {got} spins, model has {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("instance with {0} spins is too large for exhaustive enumeration (limit {limit})", limit = crate::ising::MAX_EXACT_SPINS)]
    TooLarge(usize),

    #[error("target energy {target} is below the minimum possible energy {mpe}")]
    BelowMinimum { target: f64, mpe: f64 },

    #[error("flip count (E - E_MPE)/2J = {0} is not an integer")]
    NonIntegerFlips(f64),

    #[error("state has {got} amplitudes, network has {expected} modes")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integration diverged at t = {time}: {reason}")]
    Divergence { time: f64, reason: String },

    #[error("signal mode {mode} is undecided (|Re A| = {value:e})")]
    Undecided { mode: usize, value: f64 },

    #[error("missing phase for coupling ({0}, {1})")]
    MissingPhase(usize, usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("delay-line order check failed: {0}")]
    OrderCheck(String),
}

pub type Result<T> = std::result::Result<T, Error>;
