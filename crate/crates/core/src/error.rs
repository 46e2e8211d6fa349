use std::io;

use thiserror::Error;

/// Errors raised anywhere in the laboratory.
///
/// Each variant maps onto one of the CLI exit codes through [`DqmError::exit_code`].
#[derive(Debug, Error)]
pub enum DqmError {
    #[error("invalid constant `{name}`: {value} (must be strictly positive and finite)")]
    InvalidConstant { name: &'static str, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("unsupported boundary: {0}")]
    UnsupportedBoundary(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("density error: {0}")]
    Density(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("protection error: {0}")]
    Protection(String),

    #[error("state error: {0}")]
    State(String),

    #[error("admissibility error: energy gap {delta_e} exceeds the Planck energy {planck_energy}")]
    Inadmissible { delta_e: f64, planck_energy: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("timeout: {0}")]
    Timeout(String),

    #[error("config error:\n{}", .0.iter().map(|i| format!("  - {i}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<ConfigIssue>),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

/// One violation found while loading a config, anchored at a field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl ConfigIssue {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl DqmError {
    /// Process exit code used by the `dqm` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            DqmError::Config(_) | DqmError::InvalidConstant { .. } | DqmError::InvalidInput(_) => 2,
            DqmError::Timeout(_) => 4,
            DqmError::Io(_) => 1,
            _ => 3,
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        DqmError::Config(vec![ConfigIssue::new(path, message)])
    }
}

pub type Result<T, E = DqmError> = std::result::Result<T, E>;
