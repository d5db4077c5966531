use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported signature (r={r}, s={s}): {reason}")]
    UnsupportedSignature { r: usize, s: usize, reason: String },
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point {point:?} is within stencil reach of the boundary on axis {axis}")]
    NearBoundary { axis: usize, point: Vec<f64> },
    #[error("degenerate metric at {point:?}: {reason}")]
    DegenerateMetric { point: Vec<f64>, reason: String },
    #[error("not a two-form: antisymmetry defect {0:e}")]
    NotTwoForm(f64),
    #[error("not in the spin group: {0}")]
    NotSpin(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("step size underflow while integrating to tolerance {tol:e}")]
    StepUnderflow { tol: f64 },
    #[error("eigensolver failed: {0}")]
    Eigensolver(String),
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("operation not supported by this scenario: {0}")]
    Unsupported(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
