//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by game construction, evaluation, and machine execution.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a precondition.
    #[error("argument error: {0}")]
    Argument(String),

    /// Inputs are structurally valid but inconsistent with each other
    /// (e.g. a strategy missing a type the game can sample).
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested operation is not available for this representation
    /// (e.g. exact expected utility on a sampler-mode type distribution).
    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),

    /// A machine ran out of step budget mid-execution.
    #[error(
        "budget exhausted at instruction {instruction}: {steps_used} steps used, \
         next instruction costs {cost}, budget is {budget}"
    )]
    BudgetExhausted {
        instruction: usize,
        steps_used: u64,
        cost: u64,
        budget: u64,
    },

    /// Failed to parse a textual representation (rational, bitstring, JSON).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
