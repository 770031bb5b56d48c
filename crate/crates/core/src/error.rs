use thiserror::Error;

use crate::catalog::dsl::DslError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("ambient dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("form has odd-degree components (degree {degree})")]
    OddDegree { degree: usize },

    #[error("matrix form has a nonzero degree-0 part (max |entry| = {magnitude:e})")]
    NotNilpotent { magnitude: f64 },

    #[error("series has {have} coefficients, need at least {need}")]
    SeriesTooShort { have: usize, need: usize },

    #[error("series must start with 1, got {0}")]
    SeriesNotUnital(f64),

    #[error("invalid finite-difference configuration: {0}")]
    InvalidFdConfig(String),

    #[error("stencil point {point:?} leaves the chart domain")]
    OutOfDomain { point: Vec<f64> },

    #[error("metric is not positive definite at {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },

    #[error("metric is not Hermitian at {point:?} (defect {defect:e})")]
    NotHermitian { point: Vec<f64>, defect: f64 },

    #[error("connection has mixed holomorphic curvature blocks (max {residual:e})")]
    MixedCurvature { residual: f64 },

    #[error("{formula} precondition violated: {condition} residual {residual:e} exceeds {tolerance:e}")]
    Precondition {
        formula: String,
        condition: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("form is not of type (p,0): antiholomorphic component {magnitude:e}")]
    NotHolomorphicForm { magnitude: f64 },

    #[error("non-finite density value at {point:?}")]
    NonFinite { point: Vec<f64> },

    #[error("quadrature budget exhausted: error estimate {estimate:e} above tolerance {tolerance:e}")]
    BudgetExhausted { estimate: f64, tolerance: f64 },

    #[error("invalid quadrature request: {0}")]
    InvalidQuadrature(String),

    #[error("unknown connection `{0}` (expected levi-civita, bismut or chern)")]
    UnknownConnection(String),

    #[error("unknown manifold `{0}`")]
    UnknownManifold(String),

    #[error("unsupported parameter for `{manifold}`: {detail}")]
    UnsupportedParam { manifold: String, detail: String },

    #[error("declared flags of `{manifold}` disagree with measured residuals |dω| = {d_omega:e}, |∂∂̄ω| = {skt:e}")]
    FlagMismatch {
        manifold: String,
        d_omega: f64,
        skt: f64,
    },

    #[error("{0}")]
    Dsl(#[from] DslError),
}
