use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series did not converge within {max_terms} terms at x = {x}")]
    NonConvergence { x: f64, max_terms: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("no sign change of M(-1/2; 1/2; x) on [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("-theta * a = {arg} is at or beyond the first zero {rho} of the Kummer denominator")]
    PoleRegion { arg: f64, rho: f64 },

    #[error("grid steps differ: {0} vs {1}")]
    GridMismatch(f64, f64),

    #[error("both convolution operands carry a r^(-1/2) singular part")]
    DoubleSingularity,

    #[error("grid step {dx} is coarser than the required {limit}")]
    ResolutionTooCoarse { dx: f64, limit: f64 },

    #[error("leading product-integration weight {0:e} is unusable")]
    SingularStep(f64),

    #[error("argument outside the domain: {0}")]
    DomainError(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
