use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("invalid Fock space: {0}")]
    InvalidSpace(String),

    #[error("truncated space of dimension {0} exceeds the supported size")]
    TooLarge(usize),

    #[error("expected {expected} entries, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration {config} has {count} unsatisfied couplings, expected exactly one")]
    NotSingleFlip { config: String, count: usize },

    #[error("singular Gram matrix: components coincide")]
    SingularGram,

    #[error("n_det = {n_det} exceeds n_solution = {n_solution}")]
    Counting { n_det: usize, n_solution: usize },

    #[error(transparent)]
    Core(#[from] cim_core::Error),
}

pub type Result<T> = std::result::Result<T, QuantumError>;
