use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("band limit {lmax} is below the minimum of {min}")]
    LmaxTooSmall { lmax: usize, min: usize },

    #[error("coefficient of degree {degree} does not fit a grid with band limit {lmax}")]
    DegreeExceedsGrid { degree: usize, lmax: usize },

    #[error("support function is not positive at node {node} (h = {value})")]
    NotPositive { node: usize, value: f64 },

    #[error(
        "curvature matrix is not positive-definite: lambda_min = {lambda_min:e} at node {node}"
    )]
    NotConvex { lambda_min: f64, node: usize },

    #[error("ball center has norm {center_norm} >= radius {radius}; origin must be interior")]
    OriginNotInterior { center_norm: f64, radius: f64 },

    #[error("no convex body after {retries} draws (seed {seed}, amplitude {amplitude}); last lambda_min = {lambda_min:e}")]
    RandomBodyRejected {
        seed: u64,
        amplitude: f64,
        retries: usize,
        lambda_min: f64,
    },

    #[error("polar refinement for direction {node} stalled after {iterations} iterations (residual {residual:e})")]
    PolarNotConverged {
        node: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("field must be positive, found {value} at node {node}")]
    NonPositiveField { node: usize, value: f64 },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid body document: {0}")]
    InvalidBody(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
