use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported query: delta > 0 requires gamma = 1 (got gamma = {gamma}, delta = {delta})")]
    UnsupportedCombination { gamma: f64, delta: f64 },

    #[error("exhaustive search limited to N <= {limit} (got N = {n})")]
    SizeLimit { n: usize, limit: usize },

    #[error("multiplier search did not converge after {iterations} iterations; bracket [{lo}, {hi}]")]
    SolverDivergence { iterations: usize, lo: f64, hi: f64 },

    #[error("quadrature did not converge: estimate {estimate}, error {error} after {subdivisions} subdivisions")]
    Quadrature {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("projected gradient hit the iteration cap; gradient-mapping norm {gradient_mapping_norm}")]
    IterationCap { gradient_mapping_norm: f64 },

    #[error("loss {value} at round {round}, arm {arm} is outside [0, 1]")]
    LossOutOfRange { round: usize, arm: usize, value: f64 },

    #[error("trace is missing {0}")]
    IncompleteTrace(&'static str),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
