use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution spec: {0}")]
    InvalidSpec(String),

    #[error("infeasible mean {target} for a Poisson law truncated at >= {min}")]
    InfeasibleMean { min: u32, target: f64 },

    #[error("unsupported derivative order {0} (at most 3)")]
    UnsupportedOrder(u32),

    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),

    #[error("numeric failure in {what}: last iterate {last}")]
    NumericFailure { what: &'static str, last: f64 },

    #[error("unsupported enumeration: {0}")]
    UnsupportedEnumeration(String),

    #[error("unsupported field: {0}")]
    UnsupportedField(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("instance too large: {0}")]
    InstanceTooLarge(String),

    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),

    #[error("sampling failure: {0}")]
    SamplingFailure(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
