use thiserror::Error;

use crate::model::TopologyDefect;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-positive density {rho:e}")]
    NonPositiveDensity { rho: f64 },

    #[error("reconstructed vacuum at interface {interface}: rho = {rho:e}")]
    ReconstructedVacuum { interface: usize, rho: f64 },

    #[error("negative radicand in one-sided speed: p'(rho) - a_n = {deficit:e} (stale a_n?)")]
    NegativeRadicand { deficit: f64 },

    #[error("singular tridiagonal system: pivot {pivot:e} in row {row}")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("junction {junction}: Newton failed after {iterations} iterations (residual {residual:e})")]
    JunctionNewtonFailure {
        junction: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("explicit scheme blew up in pipe {pipe}, cell {cell}")]
    BlowUp { pipe: usize, cell: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("runge rate needs positive differences, got {coarse:e} and {fine:e}")]
    NonPositiveDifference { coarse: f64, fine: f64 },

    #[error("invalid topology: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidTopology(Vec<TopologyDefect>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema error at `{key}`: {message}")]
    Schema { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
