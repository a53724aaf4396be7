use thiserror::Error;

/// Errors raised by the model, decoder, bound and experiment layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "exhaustive search over {candidates} supports exceeds the budget of {budget}; \
         use the local-search decoder instead"
    )]
    BudgetExceeded { candidates: u128, budget: u128 },

    #[error("no transition found: success rate stayed below {threshold} up to m = {m_max}")]
    NoTransitionFound { threshold: f64, m_max: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
