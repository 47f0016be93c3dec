use thiserror::Error;

#[derive(Debug, Error)]
pub enum MimeticError {
    #[error("unsupported operator order {0} (expected 2 or 4)")]
    UnsupportedOrder(usize),
    #[error("order {k} needs at least {min} cells per axis, got {m}")]
    TooFewCells { k: usize, m: usize, min: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid mapping: {0}")]
    InvalidMapping(String),
    #[error("singular mapping: J = {j:.3e} at logical point {point:?} ({location})")]
    SingularMapping { location: String, point: Vec<f64>, j: f64 },
    #[error("shape mismatch for {what}: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize, what: &'static str },
    #[error("weight solve failed: {0}")]
    WeightSolve(String),
    #[error("nonpositive weight {value:.3e} at index {index}")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("boundary operator check failed: {0}")]
    BoundaryOperator(String),
    #[error("coefficient tensor is not symmetric positive definite")]
    NotSpd,
    #[error("linear solve failed ({method}): relative residual {residual:.3e}")]
    Solver { method: &'static str, residual: f64 },
    #[error("time integration became nonfinite at step {step}")]
    Instability { step: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MimeticError>;
