use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The a priori measure would lose full support.
    #[error("degenerate a priori measure: {0}")]
    DegenerateMeasure(String),

    #[error("enumeration of {requested} words exceeds the budget of {budget}")]
    EnumerationTooLarge { requested: u128, budget: u64 },

    #[error("exp overflow while building the transfer operator (max potential value {max_value}); rescale the potential")]
    Overflow { max_value: f64 },

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("contract violation: {0}")]
    ContractViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
