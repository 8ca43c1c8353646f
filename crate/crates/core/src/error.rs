//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by game construction, the solvers, and the experiment
/// harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A game definition or experiment configuration failed validation.
    /// `field` names the offending input.
    #[error("invalid {field}: {reason}")]
    InvalidSpec { field: String, reason: String },

    /// Utility is undefined for a table with no occupants.
    #[error("utility undefined for occupancy 0")]
    ZeroOccupancy,

    /// An observed signal sequence has zero likelihood under every state
    /// with positive prior mass.
    #[error("observation impossible under every state with positive prior")]
    ImpossibleObservation,

    /// A simulated signal profile contradicts a degenerate belief, so no
    /// strategy entry exists for the induced context.
    #[error("context unreachable: {0}")]
    UnreachableContext(String),

    /// The instance's memo/enumeration state space exceeds the configured
    /// budget.
    #[error("state space of {required} entries exceeds budget of {budget}")]
    BudgetExceeded { required: u128, budget: u64 },

    /// A requested operation is not defined for this configuration.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// An internal invariant was violated; indicates a bug.
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),

    /// Configuration file could not be parsed or mapped onto a game.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidSpec {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    /// Process exit code used by the CLI for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidSpec { .. } => 2,
            Error::BudgetExceeded { .. } => 3,
            Error::InternalInvariant(_) => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
