use thiserror::Error;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("residuals are degenerate: {0}")]
    DegenerateResiduals(String),

    #[error("fitted autoregression could not be made stationary")]
    NonStationaryFit,

    #[error("invalid covariance model: {0}")]
    InvalidModel(String),

    #[error("sub-Gram matrix on the support is singular")]
    SingularSubGram,

    #[error("matrix is not strictly diagonally dominant (row {row})")]
    NotDiagonallyDominant { row: usize },

    #[error("exponents must satisfy 0 < c1 + c2 < 1/2 (got {c1} + {c2})")]
    InvalidExponents { c1: f64, c2: f64 },

    #[error("design of {n} rows is incompatible with {spec}")]
    IncompatibleSize { n: usize, spec: String },

    #[error("cannot place {requested} support indices under the placement constraints ({available} feasible)")]
    PlacementInfeasible { requested: usize, available: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "coordinate descent did not converge at lambda={lambda} after {sweeps} sweeps (KKT residual {kkt_residual})"
    )]
    NotConverged {
        lambda: f64,
        lambda_index: Option<usize>,
        sweeps: usize,
        kkt_residual: f64,
        beta: Vec<f64>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
