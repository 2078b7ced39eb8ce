//! CLI-level errors and their process exit codes.

use opal_core::CoreError;

/// Exit code for configuration problems (bad flags, bad config file,
/// invalid field values, mismatched checkpoints).
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for filesystem and serialization failures.
pub const EXIT_IO: i32 = 3;
/// Exit code for numerical failures during computation.
pub const EXIT_NUMERICAL: i32 = 4;

/// Anything that can abort a CLI run.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid configuration discovered before or during a run.
    #[error("config error: {0}")]
    Config(String),
    /// Filesystem problem (missing file, unwritable path, ...).
    #[error("I/O error on {path}: {source}")]
    Io {
        /// The path involved.
        path: String,
        /// The underlying error.
        source: std::io::Error,
    },
    /// Error bubbled up from the core library.
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    /// Maps the error to the documented process exit code.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
            CliError::Core(core) => match core {
                CoreError::InvalidConfig { .. }
                | CoreError::UnknownToken(_)
                | CoreError::Checkpoint(_)
                | CoreError::PairingMismatch(_) => EXIT_CONFIG,
                CoreError::Io(_) | CoreError::Json(_) | CoreError::Csv(_) => EXIT_IO,
                CoreError::NonFinite { .. }
                | CoreError::BudgetExhausted { .. }
                | CoreError::EmptyTrajectory => EXIT_NUMERICAL,
            },
        }
    }
}

/// Shorthand result type for CLI operations.
pub type Result<T> = std::result::Result<T, CliError>;

/// Annotates an I/O result with the path it touched.
pub fn io_at<T>(path: &std::path::Path, result: std::io::Result<T>) -> Result<T> {
    result.map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(CliError::Config("x".into()).exit_code(), EXIT_CONFIG);
        let io = CliError::Io {
            path: "p".into(),
            source: std::io::Error::other("boom"),
        };
        assert_eq!(io.exit_code(), EXIT_IO);
        let bad = CliError::Core(CoreError::InvalidConfig {
            field: "design_ratio",
            message: "out of range".into(),
        });
        assert_eq!(bad.exit_code(), EXIT_CONFIG);
        let nonfinite = CliError::Core(CoreError::NonFinite { tensor: "loss" });
        assert_eq!(nonfinite.exit_code(), EXIT_NUMERICAL);
    }
}
