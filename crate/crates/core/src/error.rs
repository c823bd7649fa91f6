use thiserror::Error;

/// Failures raised by the numerical routines.
///
/// The variant names double as the stable error names printed by the CLI.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("PoleError: |1 + tau^2| = {distance:e} at tau = {re} + {im}i")]
    Pole { re: f64, im: f64, distance: f64 },

    #[error("DegeneracyError: {0}")]
    Degeneracy(String),

    #[error("StepSizeUnderflow: step {step:e} below minimum {min:e} at t = {t}")]
    StepSizeUnderflow { t: f64, step: f64, min: f64 },

    #[error(
        "QuadratureNonConvergence: error estimate {estimate:e} after {subdivisions} subdivisions"
    )]
    QuadratureNonConvergence { estimate: f64, subdivisions: usize },

    #[error("PathThroughCutError: segment {segment} crosses a registered cut")]
    PathThroughCut { segment: usize },

    #[error("RadiusError: {0}")]
    Radius(String),

    #[error("ContinuationError: ambiguous branch at tau = {re} + {im}i")]
    Continuation { re: f64, im: f64 },

    #[error("ParameterCollisionError: |eps_{i} - eps_{j}| = {distance:e}")]
    ParameterCollision { i: usize, j: usize, distance: f64 },

    #[error("InvalidInput: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Short error name, e.g. `PoleError`.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Pole { .. } => "PoleError",
            Error::Degeneracy(_) => "DegeneracyError",
            Error::StepSizeUnderflow { .. } => "StepSizeUnderflow",
            Error::QuadratureNonConvergence { .. } => "QuadratureNonConvergence",
            Error::PathThroughCut { .. } => "PathThroughCutError",
            Error::Radius(_) => "RadiusError",
            Error::Continuation { .. } => "ContinuationError",
            Error::ParameterCollision { .. } => "ParameterCollisionError",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
