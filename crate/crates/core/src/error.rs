use thiserror::Error;

/// Errors raised across the library.
///
/// Validation-style failures (`InvariantViolation`, `Malformed`, ...) are kept
/// distinct from `Ambiguous` so callers can tell a bad message apart from an
/// unlucky modular collision that is worth retrying.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime {0} is too small (need p >= 5)")]
    TooSmall(u64),
    #[error("prime {0} does not fit below 2^62")]
    TooLarge(u64),
    #[error("division by zero")]
    DivisionByZero,

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("modular polynomial of level {0} is not loaded")]
    MissingLevel(u32),
    #[error("modular polynomial validation failed: {0}")]
    ValidationFailed(String),
    #[error("i/o error: {0}")]
    Io(String),

    #[error("{q} does not split in the maximal order of discriminant {disc}")]
    NotSplit { q: u64, disc: i64 },
    #[error("class group too large: {0} classes")]
    ClassGroupTooLarge(u64),
    #[error("class depth mismatch: {0} vs {1}")]
    DepthMismatch(u32, u32),
    #[error("kernel generator not found at depth {0}")]
    KernelNotFound(u32),
    #[error("unsupported order parameters: {0}")]
    BadOrder(String),

    #[error("p = {p} splits in the orientation field of discriminant {disc}")]
    BadOrientation { p: u64, disc: i64 },
    #[error("kernel polynomial does not cut out a subgroup")]
    BadKernel,
    #[error("no {ell}-isogeny kernel reaches the requested j-invariant")]
    NoMatchingKernel { ell: u64 },
    #[error("isogeny and kernel degrees are not coprime")]
    DegreesNotCoprime,
    #[error("eigenvalue test is degenerate for this prime")]
    EigenvalueAmbiguous,

    #[error("no roots above j = {0}")]
    NoRoots(String),
    #[error("parent j-invariant is not adjacent to the current one")]
    ParentNotAdjacent,
    #[error("prefix collision in direction table for q = {q}")]
    PrefixCollision { q: u64 },
    #[error("direction table has no entry for this prefix (q = {q})")]
    PrefixMissing { q: u64 },
    #[error("modular system has several common roots (q = {q}, depth {depth})")]
    Ambiguous { q: u64, depth: usize },
    #[error("modular system has no common root (q = {q}, depth {depth})")]
    Inconsistent { q: u64, depth: usize },

    #[error("direction chain for prime index {0} is exhausted")]
    ChainExhausted(usize),
    #[error("malformed message at {pointer}: {message}")]
    Malformed { pointer: String, message: String },
    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("no lifted candidate matches the target chain at depth {0}")]
    NoCandidateSurvives(usize),
    #[error("smooth representative search exhausted at depth {0}")]
    SmoothSearchExhausted(usize),
    #[error("enumeration too deep: {0} chains")]
    TooDeep(u64),
}

impl Error {
    /// True for errors caused by a rejected input message or parameter set.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Malformed { .. }
                | Error::InvariantViolation(_)
                | Error::Parse { .. }
                | Error::ValidationFailed(_)
                | Error::NotSplit { .. }
                | Error::BadOrientation { .. }
                | Error::NotPrime(_)
                | Error::TooSmall(_)
                | Error::TooLarge(_)
                | Error::ParentNotAdjacent
                | Error::ChainExhausted(_)
        )
    }

    pub fn is_ambiguous(&self) -> bool {
        matches!(self, Error::Ambiguous { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
