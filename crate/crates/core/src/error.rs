use thiserror::Error;

/// Errors raised by measure construction, convolution and bound evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("distribution has zero variance")]
    ZeroVariance,

    #[error("distribution is not centered (mean = {mean:e})")]
    NonCenteredInput { mean: f64 },

    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("atom at {position} is not within {tolerance:e} of the lattice with step {step}")]
    NotLatticeAligned {
        position: f64,
        step: f64,
        tolerance: f64,
    },

    #[error("convolution would produce {atoms} atoms, cap is {cap}; use the lattice path")]
    SupportExplosion { atoms: usize, cap: usize },

    #[error("error budget {budget:e} reached the abort threshold 0.5")]
    BudgetExceeded { budget: f64 },

    #[error("n * alpha = {product} is not an integer (n = {n}, alpha = {alpha})")]
    NonIntegerSplit { n: u64, alpha: f64, product: f64 },

    #[error("need 0 <= r < s <= n, got r = {r}, s = {s}, n = {n}")]
    BadRange { r: u64, s: u64, n: u64 },

    #[error("symmetrized distribution is degenerate at the requested scale")]
    DegenerateSymmetrization,

    #[error("family has no scenario satisfying the bound hypotheses")]
    EmptyFamily,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("{0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}
