//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any stage of the pricing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid market parameters: {0}")]
    InvalidParams(String),

    #[error("invalid monitoring schedule: {0}")]
    InvalidSchedule(String),

    #[error("grid needs at least 4 points, got {0}")]
    GridTooSmall(usize),

    #[error("no grid point within 1e-12 of z = 1 for n = {n}, z_max = {z_max}")]
    GridPin { n: usize, z_max: f64 },

    #[error("index {index} outside interior stencil range 1..={max}")]
    BoundaryIndex { index: usize, max: usize },

    #[error("jump window h must be positive, got {0}")]
    NonPositiveWindow(f64),

    #[error("time {tau} outside the evolution horizon [0, {horizon}]")]
    TimeOutOfRange { tau: f64, horizon: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("cannot amplitude-encode a zero vector")]
    ZeroVector,

    #[error("parameter slot {slot} out of range for a {params}-parameter circuit")]
    SlotOutOfRange { slot: usize, params: usize },

    #[error("ansatz needs at least 2 qubits for entangling gates, got {0}")]
    AnsatzTooSmall(usize),

    #[error("shot count must be positive")]
    ZeroShots,

    #[error("parameter vector has length {got}, circuit expects {expected}")]
    ParameterCount { got: usize, expected: usize },

    #[error("McLachlan solve failed: {0}")]
    SolverFailure(String),

    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("explicit scheme unstable: {0}")]
    Instability(String),

    #[error("matrix exponential produced non-finite entries")]
    NonFinite,

    #[error(
        "initial-state fit stopped at cost {cost:.3e} (threshold {threshold:.3e}) \
         after {restarts} restarts"
    )]
    FitThreshold {
        cost: f64,
        threshold: f64,
        restarts: usize,
    },

    #[error("price extraction failed: |amplitude at z = 0| = {0:.3e} below 1e-9")]
    ExtractionAnchor(f64),

    #[error("invalid run spec: {0}")]
    InvalidRunSpec(String),

    #[error("segment {segment}: {source}")]
    Segment {
        segment: usize,
        source: Box<Error>,
    },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("config error: {0}")]
    ConfigValue(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attach the index of the evolution segment in which the error arose.
    pub fn in_segment(self, segment: usize) -> Self {
        Error::Segment {
            segment,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
