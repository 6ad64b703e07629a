use thiserror::Error;

/// Errors produced by the solver and its supporting machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed sparsity pattern: {0}")]
    MalformedPattern(String),

    #[error("order mismatch: expected {expected}, found {found}")]
    OrderMismatch { expected: usize, found: usize },

    #[error("invalid tree decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("infeasible edge ratio {ratio}: at most {max} edges per vertex are available")]
    InfeasibleRatio { ratio: f64, max: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("constraint {0} has an all-zero matrix")]
    ZeroConstraint(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pair ({row}, {col}) is not in the pattern")]
    NotInPattern { row: usize, col: usize },

    #[error("iterate is not interior in cone block {cone}")]
    NotInterior { cone: usize },

    #[error("matrix is not positive definite at pivot {pivot}")]
    NotPositiveDefinite { pivot: usize },

    #[error("Schur entry ({row}, {col}) falls outside the preallocated pattern")]
    PatternViolation { row: usize, col: usize },

    #[error("singular 2x2 block in the homogeneous Newton system")]
    SingularEmbedding,

    #[error("oracle guardrail exceeded: {0}")]
    Guardrail(String),

    #[error("completion failed at clique {clique}")]
    Completion { clique: usize },

    #[error("problem is infeasible or unbounded: {0}")]
    Infeasible(String),

    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
