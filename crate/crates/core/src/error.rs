use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse scenario: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("invalid field `{field}`: {reason}")]
    InvalidField { field: &'static str, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown policy `{0}` (expected one of c3t-budget, c3t-budget-e, c-ucb, c-kl-ucb, c-indep-ts, c-3p3)")]
    UnknownPolicy(String),

    #[error("policy `{policy}` chose dose {dose} in round {round} with no budget left")]
    BudgetViolation {
        policy: &'static str,
        round: usize,
        dose: usize,
    },

    #[error("traces come from different scenarios")]
    MixedScenarios,

    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),

    #[error("output failed: {0}")]
    Output(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn field(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidField {
            field,
            reason: reason.into(),
        }
    }
}
