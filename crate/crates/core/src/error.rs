//! Crate-wide error type.
//!
//! Library operations return `Result<_, Error>`; the CLI maps these onto exit
//! codes (input problems -> 1, refinement budget exhaustion -> 2).

use thiserror::Error;

use crate::fixpoint_solver::ApproxFixedPoint;
use crate::labeling::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate dimension: n must be at least 1")]
    DegenerateDimension,

    #[error("mesh parameter must be at least 1")]
    InvalidMesh,

    #[error("point outside simplex: {0}")]
    PointOutsideSimplex(String),

    #[error("invalid barycentric point: {0}")]
    InvalidBaryPoint(String),

    #[error("map range violation in '{map}': {detail}")]
    MapRangeViolation { map: String, detail: String },

    #[error("nonconforming labeling: {} violation(s), first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    NonconformingLabeling(Vec<Violation>),

    #[error("no boundary door on the distinguished face")]
    NoBoundaryDoor,

    #[error("cell is not fully labeled")]
    NotFullyLabeled,

    #[error("tau too large: {tau} must be smaller than {max}")]
    TauTooLarge { tau: f64, max: f64 },

    #[error("tau must be positive (got {0})")]
    TauNotPositive(f64),

    #[error("residual bound violated: {0}")]
    BoundViolated(String),

    #[error("not converged at m_max: best residual {residual:.3e} at m={m_final}")]
    NotConverged {
        residual: f64,
        m_final: u32,
        best: Box<ApproxFixedPoint>,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
