use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("fixed-point iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("mode {mode} has {} self-consistent frequencies", branches.len())]
    MultivaluedFrequency { mode: usize, branches: Vec<f64> },

    #[error("coupling ratio g_{j}{k} is undefined: mode {k} has zero effective coupling")]
    DegenerateCoupling { j: usize, k: usize },

    #[error("mode {mode} is strongly coupled (g/kappa = {ratio:.3} > 0.5)")]
    StrongCouplingRegime { mode: usize, ratio: f64 },

    #[error("effective frequencies differ by {difference:e} rad/s (tolerance {tolerance:e})")]
    MismatchedFrequencies { difference: f64, tolerance: f64 },

    #[error("time step {dt:e} s exceeds the stability bound {limit:e} s")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("drift matrix is not stable (max Re eigenvalue {max_real:e})")]
    UnstableDrift { max_real: f64 },

    #[error("state is unphysical (smallest symplectic eigenvalue {min_symplectic:e} < 1/4)")]
    UnphysicalState { min_symplectic: f64 },

    #[error("trajectory {trajectory} amplitude exceeded {limit:e} at t = {time:e} s")]
    AmplitudeOverflow { trajectory: usize, time: f64, limit: f64 },

    #[error("operation requires {expected} coupling")]
    WrongCouplingKind { expected: &'static str },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

impl Error {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Error::Invalid { field: field.into(), reason: reason.into() }
    }

    /// Validation errors come from bad input; everything else is a failure of
    /// the numerics on otherwise valid input.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid { .. }
                | Error::WrongCouplingKind { .. }
                | Error::DimensionMismatch { .. }
                | Error::StrongCouplingRegime { .. }
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Invalid { .. } => "Invalid",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::MultivaluedFrequency { .. } => "MultivaluedFrequency",
            Error::DegenerateCoupling { .. } => "DegenerateCoupling",
            Error::StrongCouplingRegime { .. } => "StrongCouplingRegime",
            Error::MismatchedFrequencies { .. } => "MismatchedFrequencies",
            Error::StepTooLarge { .. } => "StepTooLarge",
            Error::UnstableDrift { .. } => "UnstableDrift",
            Error::UnphysicalState { .. } => "UnphysicalState",
            Error::AmplitudeOverflow { .. } => "AmplitudeOverflow",
            Error::WrongCouplingKind { .. } => "WrongCouplingKind",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
        }
    }
}
