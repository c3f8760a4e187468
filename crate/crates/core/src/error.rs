use thiserror::Error;

/// Errors raised while validating or deriving section geometry.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid geometry: {0}")]
    Invalid(String),
    #[error("arc length {s} outside [0, {max}]")]
    OutOfRange { s: f64, max: f64 },
    #[error("internal consistency: {0}")]
    Inconsistent(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

/// Errors from the rod ODE, the integrator and the shooting solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid load: {0}")]
    InvalidLoad(String),
    #[error("tendon tangent vanishes at s = {s} (|p_t'| = {norm:e})")]
    SingularTangent { s: f64, norm: f64 },
    #[error("system matrix ill-conditioned at s = {s} (cond = {cond:e})")]
    IllConditioned { s: f64, cond: f64 },
    #[error("integration diverged at s = {s}")]
    Diverged { s: f64 },
    #[error("shooting did not converge after {iterations} iterations (best residual {best_residual:e})")]
    NotConverged { iterations: usize, best_residual: f64 },
    #[error("progression factor {0} outside (0, 1]")]
    EtaOutOfRange(f64),
    #[error("invalid span: {0}")]
    InvalidSpan(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Errors from trajectory handling and metrics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("trajectory needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("trajectory has zero length")]
    ZeroLength,
    #[error("point count mismatch: {0} vs {1}")]
    CountMismatch(usize, usize),
    #[error("empty trajectory")]
    Empty,
    #[error("resample count must be at least 2, got {0}")]
    BadCount(usize),
}

/// Errors from FTL planning.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("invalid plan configuration: {0}")]
    InvalidConfig(String),
    #[error("all {count} tension evaluations failed at eta = {eta}: {first}")]
    AllSolvesFailed { eta: f64, count: usize, first: String },
    #[error("polynomial fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("rank-deficient design matrix (rank {rank} < {needed})")]
    RankDeficient { rank: usize, needed: usize },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Top-level error for I/O and command plumbing.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
