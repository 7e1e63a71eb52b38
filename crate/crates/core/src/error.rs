use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid spatial grid: {0}")]
    InvalidGrid(String),
    #[error("invalid time nodes: {0}")]
    InvalidTimeNodes(String),
    #[error("invalid physical constants: {0}")]
    InvalidConstants(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error(
        "moment order {order} needs f0 at at least {} distinct times (n+1 rule), only {available} available",
        order + 1
    )]
    InsufficientTimeSamples { order: usize, available: usize },
    #[error("grid spans [{x_min}, {x_max}] but the state needs at least ±{required} (4σ)")]
    GridTooNarrow { x_min: f64, x_max: f64, required: f64 },
    #[error("norm drift {drift:e} at step {step} exceeds tolerance; reduce dt or refine the grid")]
    NormDrift { step: usize, drift: f64 },
    #[error(
        "wave function reaches the grid edge at step {step} (edge amplitude {ratio:e} of max); \
         periodic wrap-around would corrupt the data"
    )]
    WrapAround { step: usize, ratio: f64 },
    #[error("lattices do not overlap")]
    DisjointLattices,
}

/// Non-fatal diagnostics attached to results.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// `|f|` at a grid edge is not small compared to `max |f|`; cumulative
    /// integrals started at `x_min` no longer approximate `∫_{-∞}^x`.
    EdgeDecay { ratio: f64 },
    /// The `pⁿ`-weighted Wigner integrand has not decayed at the momentum
    /// lattice edge.
    MomentumTruncation { order: usize, ratio: f64 },
    /// The discrete Wigner transform left an imaginary residue.
    ImaginaryResidue { relative: f64 },
    /// `f_0` went negative beyond the noise floor.
    NegativeDensity { min: f64 },
    /// Density-matrix samples required `x ± y` outside the wave-function grid.
    Extrapolated { count: usize },
    /// Many equispaced nodes: Lagrange differentiation amplifies noise.
    RungeRisk { nodes: usize },
    /// Off-diagonal spacing too coarse to resolve the state's momenta.
    CoarseOffDiagonal { spacing: f64, recommended: f64 },
    /// A Taylor term exceeded the overflow guard.
    TermOverflow { order: usize, magnitude: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::EdgeDecay { ratio } => write!(
                f,
                "field does not decay at the grid edge ({ratio:e} of max); enlarge the grid"
            ),
            Warning::MomentumTruncation { order, ratio } => write!(
                f,
                "order-{order} Wigner integrand is {ratio:e} of max at the momentum lattice edge"
            ),
            Warning::ImaginaryResidue { relative } => {
                write!(f, "Wigner transform imaginary residue {relative:e}")
            }
            Warning::NegativeDensity { min } => write!(f, "probability density dips to {min:e}"),
            Warning::Extrapolated { count } => {
                write!(f, "{count} density-matrix samples fell outside the grid")
            }
            Warning::RungeRisk { nodes } => write!(
                f,
                "{nodes} equispaced time nodes: keep the total window short compared to the dynamics"
            ),
            Warning::CoarseOffDiagonal { spacing, recommended } => write!(
                f,
                "off-diagonal spacing {spacing} exceeds the recommended {recommended}"
            ),
            Warning::TermOverflow { order, magnitude } => {
                write!(f, "Taylor term of order {order} reached {magnitude:e}")
            }
        }
    }
}
