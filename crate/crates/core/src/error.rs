use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("cell masses do not match the allocation: {0}")]
    MassMismatch(String),
    #[error("strata do not tile the unit cube: {0}")]
    NotATiling(String),
    #[error("coarse stratum {coarse} has no exact cover by fine strata")]
    NotARefinement { coarse: usize },
    #[error("stratum index {index} out of range ({len} strata)")]
    StratumIndex { index: usize, len: usize },
    #[error("split of stratum {stratum} gives mass {mass}, not a multiple of 1/{n}")]
    NonIntegerAllocation { stratum: usize, mass: String, n: usize },
    #[error("split of stratum {stratum} leaves an empty piece")]
    EmptyPiece { stratum: usize },
    #[error("stratum {0} has zero mass")]
    ZeroMass(usize),
    #[error("point {0} lies outside [0,1]^d")]
    OutOfDomain(String),
    #[error("function values must lie in [0,1] for censored observation: {0}")]
    Range(String),
    #[error("support size {size} exceeds the configured cap {cap}")]
    SupportCap { size: usize, cap: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("instance too large: {0}")]
    SizeGuard(String),
    #[error("invalid grouping: {0}")]
    InvalidGrouping(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("instance generator cannot satisfy the request: {0}")]
    GeneratorInfeasible(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
