use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BzError {
    #[error("non-positive alpha ({alpha}) at t={t}, x={x}")]
    NonPositiveAlpha { alpha: f64, t: f64, x: f64 },
    #[error("non-positive conformal factor f ({0})")]
    NonPositiveF(f64),
    #[error("metric block is not positive definite (det={det}, trace={trace})")]
    NotPositiveDefinite { det: f64, trace: f64 },
    #[error("gauge scale must be positive (c1={c1}, c2={c2})")]
    NonPositiveScale { c1: f64, c2: f64 },
    #[error("null gradient of alpha: (dx alpha)^2 - (dt alpha)^2 = {0}")]
    NullGradient(f64),
    #[error("adaptive quadrature failed to reach tolerance on [{a}, {b}]")]
    QuadratureFailure { a: f64, b: f64 },
    #[error("Lambda degenerate at node {node}: |Lambda| = {value} below guard {guard}")]
    LambdaDegenerate { node: usize, value: f64, guard: f64 },
    #[error("time step {dt} exceeds cfl*dx = {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("perturbation reached the boundary at t={t} (node {node})")]
    BoundaryContamination { t: f64, node: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("point (t={t}, x={x}) lies outside the trajectory domain")]
    OutsideDomain { t: f64, x: f64 },
    #[error("complex pole: (w-beta)^2 - alpha^2 = {0} is not positive")]
    ComplexPole(f64),
    #[error("integration path crosses the pole mu^2 = r^2 near t={t}, r={r}")]
    PoleCrossing { t: f64, r: f64 },
    #[error("non-positive radius r={0}")]
    NonPositiveRadius(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, BzError>;

impl BzError {
    /// Process exit code: 1 domain failure, 2 bad input, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            BzError::QuadratureFailure { .. }
            | BzError::LambdaDegenerate { .. }
            | BzError::CflViolation { .. }
            | BzError::BoundaryContamination { .. }
            | BzError::NonFinite(_) => 3,
            BzError::GridMismatch(_) | BzError::InvalidGrid(_) | BzError::InvalidParameter(_) => 2,
            _ => 1,
        }
    }
}
