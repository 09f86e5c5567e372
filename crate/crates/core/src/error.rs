use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("subsystem index {index} out of range for {count} subsystems")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("operator is not Hermitian: max |M - M^dagger| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("permuted subsystems have unequal dimensions: {0:?}")]
    UnequalDimensions(Vec<usize>),

    #[error("not positive semidefinite: minimum eigenvalue {min_eigenvalue:e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("trace violation: trace {trace} deviates from 1 by {deviation:e}")]
    Trace { trace: f64, deviation: f64 },

    #[error("vector is not normalized: norm {norm}")]
    Unnormalized { norm: f64 },

    #[error("parameter {name} = {value} out of range")]
    Parameter { name: &'static str, value: f64 },

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("invalid probability table: {0}")]
    InvalidTable(String),

    #[error("affine constraints are inconsistent at constraint {constraint} (residual {residual:e})")]
    InconsistentAffine { constraint: usize, residual: f64 },

    #[error("invalid SDP problem: {0}")]
    InvalidProblem(String),

    #[error("variable dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("invalid extension problem: {0}")]
    InvalidExtension(String),

    #[error("bisection bracket violated: {0}")]
    Bracket(String),

    #[error("unknown state family: {0}")]
    UnknownFamily(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed file: {0}")]
    Json(#[from] serde_json::Error),
}
