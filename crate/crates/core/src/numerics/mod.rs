//! Arbitrary-precision scalars and elementary functions.
//!
//! Everything is fixed point: a [`PrecisionReal`] at precision `p` is an
//! integer multiple of `2^-p`. The elementary functions take a target
//! precision, work internally with [`GUARD_BITS`] extra bits, and return a
//! value within `2^-p` of the exact answer.

mod complex;
mod elementary;
mod powers;
pub(crate) mod real;

pub use complex::PrecisionComplex;
pub use elementary::{arctan, arg, cos, exp_real, ln2, log_real, pi, sin, sin_cos, EXP_MAX_LOG2};
pub use powers::{pow_complex, pow_real, PowerResult};
pub use real::{parse_rational, PrecisionReal, GUARD_BITS};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("exp argument {0} exceeds the limit 2^{EXP_MAX_LOG2}")]
    ExpArgumentTooLarge(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Produced instead of a value when a power would exceed the caller's bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverflowReport {
    /// Index of the eigenvalue (or 0 for scalars) that triggered the report.
    pub witness: usize,
    /// Estimate of `E * ln|x|`, the natural log of the offending magnitude.
    pub log_norm_estimate: PrecisionReal,
}

/// Bit length of a non-negative integer, as used for precision budgeting.
pub fn bit_len(e: &num_bigint::BigUint) -> u32 {
    e.bits() as u32
}
