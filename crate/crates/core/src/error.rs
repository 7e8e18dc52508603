use crate::fosg::InfoKey;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("game tree exceeds the node budget of {budget}")]
    BudgetExceeded { budget: usize },

    #[error("no strategy entry for information state {0}")]
    MissingStrategy(InfoKey),

    #[error("{name} = {value} is outside of [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid query order: {0}")]
    InvalidOrder(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: u64, residual: f64 },

    #[error("importance weight {weight:e} fell below the floor {floor:e}")]
    WeightUnderflow { weight: f64, floor: f64 },

    #[error("algorithm {0} is not deterministic given its initial state")]
    Nondeterministic(String),

    #[error("{unfilled} unfilled information states exceed the completion cap of {cap}")]
    CompletionCap { unfilled: usize, cap: usize },

    #[error("invalid game definition: {0}")]
    InvalidGame(String),

    #[error("unknown game `{0}`")]
    UnknownGame(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            min: 0.0,
            max: 1.0,
        })
    }
}
