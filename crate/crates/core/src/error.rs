use std::fmt;

/// Named precondition of the adversarial construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// Mutual incoherence: `mu < 1/(2m-1)`.
    Mip,
    /// `m <= min(N^beta, n)`.
    Sparsity,
    /// `m <= (3 - L - sqrt(8 - 8L)) / L`.
    SparsityVsTail,
    /// `mu` inside the feasible interval determined by `L` and `m`.
    MuInterval,
    /// Tail atoms pairwise inner products bounded by `L`.
    TailCoherence,
}

impl Condition {
    pub fn label(self) -> &'static str {
        match self {
            Condition::Mip => "MIP",
            Condition::Sparsity => "sparsity",
            Condition::SparsityVsTail => "sparsity-vs-tail",
            Condition::MuInterval => "mu-interval",
            Condition::TailCoherence => "tail-coherence",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("column {index} has norm {norm:e}, cannot normalize")]
    ZeroColumn { index: usize, norm: f64 },
    #[error("{0} is not a power of two (>= 2)")]
    NotPowerOfTwo(usize),
    #[error("mu = {mu} must be below 1/(m-1) = {limit} for m = {m}")]
    MuTooLarge { m: usize, mu: f64, limit: f64 },
    #[error("condition {condition} violated: {detail}")]
    ConditionViolated { condition: Condition, detail: String },
    #[error("target coherence {target} is not above the Welch bound {welch}")]
    TargetInfeasible { target: f64, welch: f64 },
    #[error("alternating projection stopped at coherence {achieved} (target {target})")]
    NoConvergence { achieved: f64, target: f64 },
    #[error("sparse vector has empty support")]
    EmptySupport,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid sparsity {m} (allowed 1..={max})")]
    BadSparsity { m: usize, max: usize },
    #[error("restricted least squares is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("MIP violated: mu = {mu} is not below 1/(2m-1) = {limit} for m = {m}")]
    MipViolated { m: usize, mu: f64, limit: f64 },
    #[error("m = {m} exceeds N^beta = {bound} (beta = {beta})")]
    BetaInconsistent { m: usize, beta: f64, bound: f64 },
    #[error("degenerate parameters: {0}")]
    Degenerate(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
