//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// UE and antenna coincide; the free-space coefficient is undefined.
    #[error("degenerate geometry: UE and antenna coincide")]
    DegenerateGeometry,

    /// An antenna coordinate falls outside its segment.
    #[error("position {x} outside segment {segment}")]
    OutOfSegment { segment: usize, x: f64 },

    /// Vector lengths disagree with the protocol or scenario.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A receive covariance came out numerically singular.
    #[error("singular covariance in receiver update")]
    SingularCovariance,

    /// The sensing-power system has no solution inside the power budgets.
    #[error("rate constraints infeasible for UE {ue}: |v|^2 = {v_sq}")]
    InfeasibleRates { ue: usize, v_sq: f64 },

    /// Configuration or CLI input rejected.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
