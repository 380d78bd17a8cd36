//! Error-to-exit-code mapping for the `swarm` binary.

use std::fmt;

use swarm_core::Error as CoreError;

/// Process exit codes, one per failure domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    /// Scenario ran but a requested assertion (contained = true) failed.
    AssertionFailed = 1,
    /// Unusable input: config grammar, file I/O, inconsistent dimensions.
    Config = 2,
    /// Coupling could not be generated or failed structural validation.
    Coupling = 3,
    /// Integration blew up.
    Divergence = 4,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Coupling(String),
    Divergence(String),
    AssertionFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::Config,
            CliError::Coupling(_) => ExitCode::Coupling,
            CliError::Divergence(_) => ExitCode::Divergence,
            CliError::AssertionFailed(_) => ExitCode::AssertionFailed,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Coupling(msg) => write!(f, "coupling error: {msg}"),
            CliError::Divergence(msg) => write!(f, "divergence: {msg}"),
            CliError::AssertionFailed(msg) => write!(f, "assertion failed: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match &err {
            CoreError::Divergence { .. } => CliError::Divergence(err.to_string()),
            CoreError::GenerationFailed { .. }
            | CoreError::FailedValidation { .. }
            | CoreError::DegenerateSpectrum { .. }
            | CoreError::Unbalanced { .. } => CliError::Coupling(err.to_string()),
            _ => CliError::Config(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Config(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
