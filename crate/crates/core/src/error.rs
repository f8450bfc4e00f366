use thiserror::Error;

use crate::grid::DefectField;

/// Index triple `(i, j, k)`, 1-based, as it appears in diagnostics.
pub type Triple = (usize, usize, usize);

#[derive(Debug, Error)]
pub enum Error {
    #[error("index error: {0}")]
    Index(String),
    #[error("duplicate structure constant entry for (i, j, k) = {0:?}")]
    DuplicateEntry(Triple),
    #[error("antisymmetry violated at (i, j, k) = {0:?}")]
    AntisymmetryViolation(Triple),
    #[error("Jacobi identity fails for (i, j, k) = {triple:?}: residual {residual}")]
    JacobiViolation { triple: Triple, residual: String },
    #[error("grading violated: [X_{}, X_{}] has a component on X_{} of the wrong degree", .0.0, .0.1, .0.2)]
    GradingViolation(Triple),
    #[error("stratification fails: [V_1, V_{layer}] spans dimension {rank}, expected dim V_{next} = {expected}", next = layer + 1)]
    StratificationError { layer: usize, rank: usize, expected: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("scale must be positive, got {0}")]
    NonpositiveScale(f64),
    #[error("basis mismatch between forms")]
    BasisMismatch,
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("form degree {degree} exceeds dimension {dim}")]
    DegreeExceedsDimension { degree: usize, dim: usize },
    #[error("group is commutative; this operation requires step at least 2")]
    Commutative,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("step-1 hypothesis fails: {}", .0.summary())]
    PreconditionDefect(Box<DefectField>),
    #[error("ball B(z, r) leaves the domain")]
    BallExitsDomain,
    #[error("invalid slice axes: {0}")]
    InvalidSlice(String),
    #[error("defect mode does not match the algebra: {0}")]
    ModeMismatch(String),
    #[error("bad generator parameters: {0}")]
    BadParams(String),
    #[error("need at least 3 unsaturated scales, got {0}")]
    TooFewScales(usize),
    #[error("unknown group {0:?}")]
    UnknownGroup(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
