use core::fmt;

/// Errors produced by shape construction, evaluators and quadrature.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A point's dimension does not match the shape's dimension.
    DimensionMismatch { expected: usize, got: usize },
    /// Dimension outside the supported range for a constant or formula.
    DimensionOutOfRange { dim: usize, min: usize, max: usize },
    /// A parameter violated a precondition (message names the parameter).
    InvalidParameter(&'static str),
    /// The shape has no analytic perimeter (overlapping CSG operands).
    MissingPerimeter,
    /// The shape has no analytic volume (overlapping CSG operands).
    MissingVolume,
    /// Richardson-extrapolated derivative did not reach the tolerance.
    DerivativeNotConverged { error_indicator: f64, tolerance: f64 },
    /// Radial quadrature error estimate exceeded the tolerance.
    QuadratureNotConverged { error_estimate: f64, tolerance: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::DimensionOutOfRange { dim, min, max } => {
                write!(f, "dimension {dim} outside supported range [{min}, {max}]")
            }
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::MissingPerimeter => {
                write!(f, "shape has no analytic perimeter (overlapping CSG operands)")
            }
            Error::MissingVolume => {
                write!(f, "shape has no analytic volume (overlapping CSG operands)")
            }
            Error::DerivativeNotConverged { error_indicator, tolerance } => write!(
                f,
                "directional derivative did not converge: indicator {error_indicator:e} > tol {tolerance:e}"
            ),
            Error::QuadratureNotConverged { error_estimate, tolerance } => write!(
                f,
                "radial quadrature did not converge: estimate {error_estimate:e} > tol {tolerance:e}"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
