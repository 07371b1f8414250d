//! Error types for every subsystem.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("unknown domain kind `{0}`")]
    UnknownDomain(String),
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("unknown gauge `{0}`")]
    UnknownGauge(String),
    #[error("metric is not positive definite at ({x}, {y}): min eigenvalue {eig}")]
    NotSpd { x: f64, y: f64, eig: f64 },
    #[error("gauge jacobian is singular at ({x}, {y}): det {det}")]
    SingularJacobian { x: f64, y: f64, det: f64 },
    #[error("gauge does not map the closed domain onto itself near ({x}, {y})")]
    GaugeNotBijective { x: f64, y: f64 },
    #[error("invalid domain parameter: {0}")]
    BadParameter(String),
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("spacing must be positive, got {0}")]
    BadSpacing(f64),
    #[error("stencil radius must be at least 1, got {0}")]
    BadStencilRadius(usize),
    #[error("domain produced no mesh vertices")]
    EmptyDomain,
    #[error("stencil graph is disconnected: {components} components")]
    Disconnected { components: usize },
    #[error("mesh file: {0}")]
    Io(#[from] std::io::Error),
    #[error("mesh file: {0}")]
    Format(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("vertex {0} is out of range")]
    BadVertex(usize),
    #[error("{count} vertices are unreachable from vertex {from_vertex}")]
    Unreachable { from_vertex: usize, count: usize },
    #[error("target {0} is unreachable")]
    UnreachableTarget(usize),
    #[error("vertex {0} is not an interior vertex")]
    NotInterior(usize),
    #[error("vertex {0} has a clipped stencil")]
    PartialStencil(usize),
    #[error("vertex {0} coincides with or is adjacent to the field source")]
    SourceInStencil(usize),
    #[error("stencil around vertex {0} is rank deficient")]
    RankDeficient(usize),
    #[error("distance gradient at vertex {vertex} has g-norm {norm:.3} < 0.5; likely near a cut point")]
    CutProximity { vertex: usize, norm: f64 },
    #[error("regular window around vertex {q} has only {found} samples (need at least {need})")]
    EmptyWindow { q: usize, found: usize, need: usize },
    #[error("field file: {0}")]
    Io(#[from] std::io::Error),
    #[error("field file: {0}")]
    Format(String),
}

#[derive(Debug, Error)]
pub enum DdrError {
    #[error("boundary frames do not match")]
    FrameMismatch,
    #[error("frame spacing {got} exceeds the allowed {max} (2h)")]
    SpacingTooCoarse { got: f64, max: f64 },
    #[error("empty data set")]
    EmptyData,
    #[error("sample index {0} is out of range")]
    BadSample(usize),
    #[error("cocycle identity violated at ({i}, {j}, {k}): residual {residual}")]
    CocycleViolation { i: usize, j: usize, k: usize, residual: f64 },
    #[error("archive file: {0}")]
    Io(#[from] std::io::Error),
    #[error("archive file: {0}")]
    Format(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Error)]
pub enum RigidityError {
    #[error("anchor samples must differ")]
    SameSample,
    #[error("sample {0} lies outside the regular window; the criterion is not valid there")]
    OutsideWindow(usize),
    #[error("shortest path is too short for step {step}: available arc {available}")]
    PathTooShort { step: f64, available: f64 },
    #[error("directions are degenerate: <w1,w2> = {dot} is within 1e-3 of 1")]
    DegenerateDirections { dot: f64 },
    #[error(transparent)]
    Ddr(#[from] DdrError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Error)]
pub enum ReconError {
    #[error("boundary frames do not match")]
    FrameMismatch,
    #[error("archive has no sources")]
    EmptyArchive,
    #[error("archive has no boundary sources")]
    NoBoundarySources,
    #[error("no probe point has regular-window coverage on both sides")]
    InsufficientCoverage,
    #[error(transparent)]
    Rigidity(#[from] RigidityError),
    #[error(transparent)]
    Ddr(#[from] DdrError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("config file: {0}")]
    Format(#[from] serde_json::Error),
}
