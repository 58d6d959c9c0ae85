//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("exponent p = {value} outside {range}")]
    ExponentOutOfRange { value: f64, range: &'static str },

    #[error("block sparsity s = {s} out of range for {m} blocks")]
    SparsityOutOfRange { s: usize, m: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sequence must be nonincreasing and nonnegative")]
    UnsortedSequence,

    #[error("power iteration did not converge within {0} iterations")]
    PowerIterationStalled(usize),

    #[error("support enumeration cap exceeded: C({m}, {s}) = {count} > {cap}")]
    EnumerationCapExceeded {
        m: usize,
        s: usize,
        count: u128,
        cap: u128,
    },

    #[error("not certified: delta = {delta} >= phi(t, p) = {phi}")]
    NotCertified { delta: f64, phi: f64 },

    #[error("no sign change on root bracket [{lo}, {hi}]: g(lo) = {g_lo}, g(hi) = {g_hi}")]
    BracketingFailed {
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
    },

    #[error("polytope membership violated: {constraint} exceeded by {excess:.3e}")]
    MembershipViolated { constraint: String, excess: f64 },

    #[error("convex weight {weight} left [0, 1] at recursion level {level}")]
    NumericalStall { weight: f64, level: usize },

    #[error("solver diverged (non-finite iterate) at iteration {0}")]
    Diverged(usize),

    #[error("factorization failed: {0}")]
    FactorizationFailed(String),

    #[error("error-bound hypothesis violated ({which}): {detail}")]
    HypothesisViolated { which: &'static str, detail: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
