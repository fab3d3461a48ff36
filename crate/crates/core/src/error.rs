use thiserror::Error;

use crate::plaplace::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain spec: {0}")]
    InvalidSpec(String),

    #[error("pole at distance {distance:.3e} from the boundary, need at least {required:.3e}")]
    PoleTooCloseToBoundary { distance: f64, required: f64 },

    #[error("mesh resolution: {0}")]
    MeshResolution(String),

    #[error("degenerate mesh: {0}")]
    Mesh(String),

    #[error("mesh has no pole vertex")]
    NoPole,

    #[error("polygon is not convex")]
    NotConvex,

    #[error("support function needs a non-zero direction")]
    ZeroDirection,

    #[error("Morrey regime needs p > n, got n = {n}, p = {p}")]
    InvalidRegime { n: u32, p: f64 },

    #[error("{0} out of range")]
    OutOfRange(String),

    #[error("solver did not converge after {} iterations (kkt = {:.3e})", report.iterations, report.kkt)]
    Convergence { report: SolveReport, best: Vec<f64> },

    #[error("discrete maximum principle violated at node {node}: value {value:.3e}")]
    MaximumPrinciple { node: usize, value: f64 },

    #[error("only {found} sample nodes in the fit window, need {required}")]
    InsufficientSamples { found: usize, required: usize },

    #[error("superlevel set at t = {level} is not convex")]
    NotQuasiconcave { level: f64 },

    #[error("combination weight {0} is not a ratio with denominator <= 64")]
    UnsupportedWeight(f64),

    #[error("grid mismatch: {0}")]
    Grid(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("config: {0}")]
    Config(String),

    #[error("malformed {format} input, line {line}: {msg}")]
    Parse { format: &'static str, line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
