//! CLI error type with stable machine-readable kinds.
//!
//! Every failure surfaces on stderr as a single JSON line
//! `{"error": <message>, "kind": <tag>}`; the tag is stable across releases
//! so scripts can branch on it without parsing prose.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] lis_core::Error),

    #[error("invalid configuration: {message}")]
    Config { message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("malformed artifact file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{what} does not match the configuration (expected {expected}, found {found}); \
             rebuild the artifact from the current config")]
    HashMismatch {
        what: &'static str,
        expected: String,
        found: String,
    },

    #[error("runs are not comparable: {message}")]
    IncompatibleRuns { message: String },

    #[error("missing input: {message}")]
    MissingInput { message: String },

    #[error("{message}")]
    Usage { message: String },
}

impl CliError {
    /// Stable machine-readable tag; core errors pass their own tag through.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Config { .. } => "config",
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Format { .. } => "format",
            CliError::HashMismatch { .. } => "hash_mismatch",
            CliError::IncompatibleRuns { .. } => "incompatible_runs",
            CliError::MissingInput { .. } => "missing_input",
            CliError::Usage { .. } => "usage",
        }
    }

    /// Process exit code: usage errors follow the conventional 2, all other
    /// failures exit 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage { .. } => 2,
            _ => 1,
        }
    }
}

/// Shorthand for config-level validation failures.
pub fn config_err<T>(message: impl Into<String>) -> Result<T> {
    Err(CliError::Config {
        message: message.into(),
    })
}

/// Wraps an I/O error with the path it concerns.
pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
