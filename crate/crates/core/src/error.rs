use thiserror::Error;

use crate::gram::SupportCertificate;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("variable count mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: u32, found: u32 },

    #[error("form of odd degree {0} has no Gram representation")]
    OddDegree(u32),

    #[error("invalid form: {0}")]
    InvalidForm(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("semidefinite problem is infeasible (max min-eigenvalue {margin:.3e})")]
    Infeasible { margin: f64 },

    #[error("solver failure: {0}")]
    NumericalFailure(String),

    #[error("generalized eigenvalues collide after {retries} random directions (gap {gap:.3e})")]
    EigenvalueCollision { retries: usize, gap: f64 },

    #[error("pencil is not diagonalizable over the reals: {0}")]
    NotDiagonalizable(String),

    #[error("{what} residual {residual:.3e} exceeds tolerance {tol:.1e}")]
    ResidualTooLarge { what: String, residual: f64, tol: f64 },

    #[error("rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },

    #[error("form is not in the span of degree-{degree} products of the support (residual {residual:.3e})")]
    NotInSubalgebra { degree: u32, residual: f64 },

    #[error("degree-{degree} products of the support are dependent: rank {rank} < {expected}")]
    RankDeficient { degree: u32, rank: usize, expected: usize },

    #[error("hypothesis failure: relation dimension {} < {} (dim U = {}, face dim = {})",
        .0.relation_dim_3, .0.relation_expected(), .0.dim_u, .0.face_dim)]
    HypothesisFailure(Box<SupportCertificate>),

    #[error("recovered weight {0:.3e} is not positive")]
    NonPositiveWeight(f64),

    #[error("recovered model does not reproduce the input moments (relative error {0:.3e})")]
    MomentMismatch(f64),

    #[error("family size {found} does not match the expected count {expected}")]
    CountMismatch { expected: usize, found: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
