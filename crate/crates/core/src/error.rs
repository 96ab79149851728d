use std::path::PathBuf;

/// Errors produced by the library.
///
/// Variants are grouped by the CLI exit code they map to: validation
/// problems (2) and enumeration-budget overruns (3).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("alphabet size must be at least 1")]
    EmptyAlphabet,

    #[error("symbol {symbol} at position {position} is outside an alphabet of size {size}")]
    SymbolOutOfRange {
        symbol: u32,
        position: usize,
        size: usize,
    },

    #[error("{0} is undefined for an empty sequence")]
    EmptySequence(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("{what}: {n} is not divisible by {by}")]
    NotDivisible {
        what: &'static str,
        n: usize,
        by: usize,
    },

    #[error("alphabet mismatch: expected size {expected}, found {found}")]
    AlphabetMismatch { expected: usize, found: usize },

    #[error("row {row} is not a probability distribution (residual {residual:e})")]
    NotStochastic { row: usize, residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("enumeration budget exceeded: {needed} entries > {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("rate {rate} exceeds main-channel capacity {capacity}")]
    Infeasible { rate: f64, capacity: f64 },

    #[error("no positive secrecy capacity (C_s = {0})")]
    NoSecrecyCapacity(f64),

    #[error("{path}:{line}: {msg}")]
    Format {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BudgetExceeded { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Checks `needed <= budget`, where `needed` is `base^exp * scale`
/// computed without overflow.
pub(crate) fn check_budget(base: usize, exp: usize, scale: u128, budget: u128) -> Result<u128> {
    let mut needed: u128 = scale;
    for _ in 0..exp {
        needed = needed.saturating_mul(base as u128);
        if needed > budget {
            return Err(Error::BudgetExceeded { needed, budget });
        }
    }
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    Ok(needed)
}
