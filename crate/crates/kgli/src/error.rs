//! Exit-code carrying error type: 2 for usage/config problems, 3 for
//! numeric failures — a stable contract for test harnesses.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation, unreadable/invalid config or input layout (exit 2).
    Usage(String),
    /// Numeric or runtime failure during a well-formed run (exit 3).
    Numeric(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        CliError::Numeric(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Numeric(m) => write!(f, "{m}"),
        }
    }
}

impl From<kgli_core::io::IoError> for CliError {
    fn from(e: kgli_core::io::IoError) -> Self {
        // broken inputs are a usage problem; runtime write failures are not
        // distinguishable here, so default to usage for reads
        CliError::Usage(e.to_string())
    }
}

impl From<kgli_core::solver::SolverError> for CliError {
    fn from(e: kgli_core::solver::SolverError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<kgli_core::experiment::ExperimentError> for CliError {
    fn from(e: kgli_core::experiment::ExperimentError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<kgli_core::inference::InferenceError> for CliError {
    fn from(e: kgli_core::inference::InferenceError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<kgli_core::functionals::FunctionalError> for CliError {
    fn from(e: kgli_core::functionals::FunctionalError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<kgli_core::spacetime::SpacetimeError> for CliError {
    fn from(e: kgli_core::spacetime::SpacetimeError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<kgli_core::hje::HjeError> for CliError {
    fn from(e: kgli_core::hje::HjeError) -> Self {
        CliError::Numeric(e.to_string())
    }
}
