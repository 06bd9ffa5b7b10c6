use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Gauss-Hermite order {0} is below 2: a one-point rule cannot carry a second moment")]
    InvalidOrder(usize),

    #[error("Gauss-Hermite order {0} is above the supported maximum of 64")]
    UnsupportedOrder(usize),

    #[error("trinomial volatility {0} exceeds 1: the middle weight 1 - sigma^2 would be negative")]
    InvalidVolatility(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate parameters: {0}")]
    DegenerateParameter(String),

    #[error("non-finite coefficient at t = {t}, x = {x}, a = {a}")]
    Evaluation { t: f64, x: f64, a: f64 },

    #[error("coefficient bound is not finite at step {step}")]
    DomainGrowth { step: usize },

    #[error("{count} successor evaluations fell outside the grid (strict domain)")]
    DomainViolation { count: u64 },

    #[error("tree evaluation needs {0} steps but the budget is 8")]
    Budget(usize),

    #[error("no policy was recorded for this solve")]
    PolicyNotRecorded,

    #[error("rate fit: {0}")]
    RateFit(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}
