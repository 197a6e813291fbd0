use thiserror::Error;

/// Operational failures of the decision procedures and constructions.
///
/// Mathematical verdicts (a map failing to be a fibration, say) are never
/// errors; they are ordinary return values. Errors signal that an input
/// violated a stated precondition or that an exhaustive search would have
/// exceeded the configured budget.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("size budget exceeded: {what} needs {needed}, budget allows {limit}")]
    BudgetExceeded {
        what: String,
        needed: usize,
        limit: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A discrete-fibration classification was requested for a map that is
    /// not a small fibration.
    #[error("not a small fibration: {0}")]
    NotSmall(String),
}

impl Error {
    pub fn budget(what: impl Into<String>, needed: usize, limit: usize) -> Self {
        Error::BudgetExceeded {
            what: what.into(),
            needed,
            limit,
        }
    }

    pub fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
