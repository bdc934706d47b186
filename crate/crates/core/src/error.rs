use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("weight power {0} is not integrable near the boundary (must exceed -1)")]
    NonIntegrableWeight(f64),

    #[error("region {0} is not covered by the grid")]
    RegionOutsideGrid(String),

    #[error("integral sequence is not strictly decreasing at r = {radius:e}; noise floor reached")]
    NoiseFloor { radius: f64 },

    #[error("weighted Neumann extrapolation did not converge at boundary point {position}")]
    NonConvergentTrace { position: f64 },

    #[error("recursion for k = {k} does not truncate (residual {residual:e})")]
    InconsistentTruncation { k: usize, residual: f64 },

    #[error("eigensolver failed: {0}")]
    EigenSolver(String),

    #[error("extension profile shooting failed: {0}")]
    Shooting(String),

    #[error("frequency {xi} exceeds the Nyquist limit {nyquist} of the tangential mesh")]
    Aliasing { xi: f64, nyquist: f64 },

    #[error("input has zero weighted norm")]
    ZeroNorm,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("input is outside the admissible regime: {0}")]
    OutOfRegime(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
