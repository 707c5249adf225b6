use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("base {0} must be at least 2")]
    BaseTooSmall(u64),
    #[error("bases {p} and {q} are not coprime (gcd = {gcd})")]
    NotCoprime { p: u64, q: u64, gcd: u64 },
    #[error("part {0} is not of the form p^a*q^b")]
    NotSmooth(String),
    #[error("part {0} appears more than once")]
    DuplicatePart(String),
    #[error("parts {larger} and {smaller} break the chain condition")]
    ChainBreak { larger: String, smaller: String },
    #[error("part value 0 is not allowed")]
    ZeroPart,
    #[error("operation requires {0}")]
    UnsupportedSystem(&'static str),
    #[error("{what} {value} exceeds the configured ceiling {ceiling}")]
    CeilingExceeded {
        what: &'static str,
        value: u128,
        ceiling: u128,
    },
    #[error("enumeration budget of {0} stored partitions exhausted")]
    BudgetExceeded(u64),
    #[error("{0} has no strictly chained partition")]
    Unreachable(u128),
    #[error("arithmetic overflow: {0}")]
    Overflow(&'static str),
    #[error("malformed word {word:?}: {reason}")]
    MalformedWord { word: String, reason: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// True when the error reports a broken mathematical invariant rather
    /// than bad input.
    pub fn is_invariant(&self) -> bool {
        matches!(self, Error::Invariant(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
