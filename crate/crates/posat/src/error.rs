//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("network validation failed: {0}")]
    InvalidNetwork(String),
    #[error("demand table validation failed: {0}")]
    InvalidDemand(String),
    #[error("demand must be positive, got {0}")]
    NonpositiveDemand(f64),
    #[error("flow violates conservation at node {node} for od {od}: residual {residual:e}")]
    ConservationViolated {
        od: usize,
        node: usize,
        residual: f64,
    },
    #[error("path for od {od} is not head-to-tail contiguous at position {position}")]
    PathNotConnected { od: usize, position: usize },
    #[error("kappa must be nonnegative, got {0}")]
    NegativeKappa(f64),
    #[error("polynomial degree must be nonnegative")]
    NegativeDegree,
    #[error("operation requires separable costs, arc {0} has cross-arc terms")]
    NotSeparable(usize),
    #[error("perception multiplier out of range on arc {arc}{}: {value}", od.map(|w| format!(", od {w}")).unwrap_or_default())]
    LambdaOutOfRange {
        od: Option<usize>,
        arc: usize,
        value: f64,
    },
    #[error("negative arc time {time:e} on arc {arc}")]
    NegativeArcTime { arc: usize, time: f64 },
    #[error("od pair {od} ({origin} -> {dest}) is disconnected")]
    DisconnectedOd { od: usize, origin: u64, dest: u64 },
    #[error("no integer ratio m/l within 1e-9 of {target} with l <= {max_denominator}")]
    NoIntegerRatio { target: f64, max_denominator: u64 },
    #[error("unknown node {0} in demand table")]
    UnknownNode(u64),
    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("unsupported BPR power {0}: must be a nonnegative integer")]
    UnsupportedPower(f64),
    #[error("bound requires a single common origin, found several")]
    MultipleOrigins,
    #[error("baseline user-equilibrium solve did not converge (gap {gap:e} after {iterations} iterations)")]
    PrueFailed { gap: f64, iterations: usize },
    #[error("no search start converged to a certified equilibrium")]
    AllStartsDiverged,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
