//! CLI error taxonomy: validation problems exit 2, numerical or convergence
//! problems exit 3.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad scenario, flags, or input files.
    Validation(String),
    /// The computation itself failed (no convergence, ambiguity, ...).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn invalid(path: impl fmt::Display, msg: impl fmt::Display) -> Self {
        CliError::Validation(format!("{path}: {msg}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "validation error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("i/o: {e}"))
    }
}

impl From<braggsim_core::physics::PhysicsError> for CliError {
    fn from(e: braggsim_core::physics::PhysicsError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<braggsim_core::noise::NoiseError> for CliError {
    fn from(e: braggsim_core::noise::NoiseError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<braggsim_core::series::SeriesError> for CliError {
    fn from(e: braggsim_core::series::SeriesError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<braggsim_core::sensitivity::SensitivityError> for CliError {
    fn from(e: braggsim_core::sensitivity::SensitivityError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<braggsim_core::spectral::SpectralError> for CliError {
    fn from(e: braggsim_core::spectral::SpectralError) -> Self {
        use braggsim_core::spectral::SpectralError::*;
        match &e {
            RecordTooShort { .. } | CarrierAboveNyquist { .. } | CutoffNotBelowCarrier { .. }
            | BadRbw(_) | RbwNotRepresentable { .. } | UnitMismatch { .. }
            | NonPositiveImpedance(_) | BandOutsidePsd { .. } => CliError::Validation(e.to_string()),
        }
    }
}

impl From<braggsim_core::fringe::FringeError> for CliError {
    fn from(e: braggsim_core::fringe::FringeError) -> Self {
        use braggsim_core::fringe::FringeError::*;
        match &e {
            NoConvergence(_) | AmbiguousCandidates { .. } | NoConsistentCandidates(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<braggsim_core::stability::StabilityError> for CliError {
    fn from(e: braggsim_core::stability::StabilityError) -> Self {
        CliError::Validation(e.to_string())
    }
}
