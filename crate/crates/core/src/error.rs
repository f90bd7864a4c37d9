use thiserror::Error;

use crate::geometry::ChartId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("tangency violation: drift {drift:e} exceeds tolerance {tol:e}")]
    TangencyViolation { drift: f64, tol: f64 },

    #[error("point leaves the chart: {0}")]
    OutOfChart(String),

    #[error("chart mismatch: expected {expected}, found {found}")]
    ChartMismatch { expected: ChartId, found: ChartId },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid manifold: {0}")]
    InvalidManifold(String),

    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("custom table has no entry for the requested pair")]
    TableMiss,

    #[error("not differentiable: {0}")]
    NonDifferentiable(String),

    #[error("no sample landed in the neighborhood intersected with dom(h)")]
    EmptyNeighborhood,

    #[error("premise failure: {0}")]
    PremiseFailure(String),

    #[error("infeasible start: {0}")]
    InfeasibleStart(String),

    #[error("stalled without convergence after {iterations} iterations")]
    StallWithoutConvergence { iterations: usize },

    #[error("config error: {0}")]
    Config(String),
}
