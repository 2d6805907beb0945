use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("arithmetic mode mismatch: {0}")]
    ModeMismatch(String),
    #[error("support of {requested} lattice points exceeds the cap of {cap}")]
    SupportCap { requested: u64, cap: u64 },
    #[error("refined cell count {requested} exceeds the cap of {cap}")]
    CellCap { requested: u64, cap: u64 },
    #[error("invalid law: {0}")]
    InvalidLaw(String),
    #[error("alpha undefined for k = {0} (log2 k must be positive)")]
    AlphaUndefined(u32),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("inversion produced mass {mass:e} at {point}; support bound too small or characteristic function inconsistent")]
    NegativeMass { point: i64, mass: f64 },
    #[error("memory cap exceeded: {0}")]
    MemoryCap(String),
}

pub type Result<T> = std::result::Result<T, Error>;
