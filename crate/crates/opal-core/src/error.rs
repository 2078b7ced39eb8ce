//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by environments, operators, the policy, training, and
/// statistics routines.
#[derive(Debug, Error)]
pub enum CoreError {
    /// An evaluation was requested after the environment's budget was spent
    /// and the caller did not permit overshoot.
    #[error("evaluation budget exhausted: {used} of {budget} evaluations used")]
    BudgetExhausted {
        /// Evaluations consumed so far.
        used: usize,
        /// Total evaluation budget.
        budget: usize,
    },

    /// A trajectory graph was requested from an empty trajectory.
    #[error("cannot build a trajectory graph from an empty trajectory")]
    EmptyTrajectory,

    /// A configuration field failed validation.
    #[error("invalid configuration: field `{field}`: {message}")]
    InvalidConfig {
        /// Name of the offending field.
        field: &'static str,
        /// Human-readable description of the violation.
        message: String,
    },

    /// A tensor in the policy forward or backward pass became non-finite.
    #[error("non-finite value in tensor `{tensor}`")]
    NonFinite {
        /// Name of the tensor that first went non-finite.
        tensor: &'static str,
    },

    /// A checkpoint could not be loaded or failed validation.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// An operator token string was not recognized.
    #[error("unknown operator token `{0}`")]
    UnknownToken(String),

    /// Paired statistics were requested over records that do not align.
    #[error("paired records do not align: {0}")]
    PairingMismatch(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error(transparent)]
    Json(#[from] serde_json::Error),

    /// CSV (de)serialization failure.
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, CoreError>;
