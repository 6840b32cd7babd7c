use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("non-finite value produced while {0}")]
    NonFinite(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("cutoff {got} is below the exactness threshold {needed} for n = {n}")]
    CutoffTooSmall { n: usize, needed: u32, got: u32 },

    #[error("cutoff mismatch between operands ({left:?} vs {right:?})")]
    CutoffMismatch { left: [u32; 3], right: [u32; 3] },

    #[error("operator is not block diagonal in the hole number ({0} offending entries)")]
    NotBlockDiagonal(usize),

    #[error("internal consistency failure in {what}: residual {residual:e}")]
    Inconsistent { what: String, residual: f64 },

    #[error("steady state in sector {sector} is not unique: kernel dimension {dim}")]
    Degenerate { sector: usize, dim: usize },

    #[error("{what}: n = {n} exceeds the supported maximum {max}")]
    SizeLimit { what: &'static str, n: usize, max: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("operator has zero norm")]
    ZeroNorm,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
