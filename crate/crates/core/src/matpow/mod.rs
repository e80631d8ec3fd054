//! Matrix powers with astronomically large exponents.
//!
//! [`matrix_power`] perturbs `M` slightly so its eigenvalues are distinct,
//! finds them as roots of the characteristic polynomial, interpolates
//! `x -> x^E` on them, and evaluates that degree `< n` polynomial at the
//! matrix. [`matrix_power_squaring`] is the plain repeated-squaring
//! reference used to validate it.

mod charpoly;
mod interpolate;
pub mod io;
mod matrix;
mod perturb;
mod roots;

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::numerics::{
    bit_len, log_real, NumericsError, OverflowReport, PowerResult, PrecisionReal, GUARD_BITS,
};

pub use charpoly::{char_poly, discriminant, discriminant_curve_eval, poly_eval_real};
pub use interpolate::{poly_at_matrix, power_interpolant, MatrixValue, PowerPolynomial};
pub use matrix::SquareMatrix;
pub use perturb::{perturb_to_distinct, Perturbation};
pub use roots::{polynomial_roots, Spectrum};

/// Pipeline stage named in errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Perturb,
    CharPoly,
    Eigenvalues,
    Interpolate,
    Evaluate,
    Squaring,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Perturb => "perturb",
            Stage::CharPoly => "char_poly",
            Stage::Eigenvalues => "eigenvalues",
            Stage::Interpolate => "interpolate",
            Stage::Evaluate => "evaluate",
            Stage::Squaring => "squaring",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Error)]
pub enum MatpowError {
    #[error("{stage}: {source}")]
    Numerics { stage: Stage, source: NumericsError },
    #[error("eigenvalues: no convergence after {iterations} sweeps (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("eigenvalues: near-degenerate spectrum (separation {separation:e}); perturb first")]
    NearDegenerate { separation: f64 },
    #[error("interpolate: ill-conditioned, needs {needed_bits} working bits")]
    IllConditioned { needed_bits: u32 },
    #[error("perturb: every discriminant sample vanished")]
    DegeneratePerturbation,
    #[error("evaluate: imaginary residual {0:e} above tolerance")]
    ImaginaryResidual(f64),
    #[error("input: {0}")]
    Input(String),
}

/// Eigenvalues of `M` at `bits`, rejecting spectra whose separation is below
/// `2^-(bits/2)`.
pub fn eigenvalues(m: &SquareMatrix, bits: u32) -> Result<Spectrum, MatpowError> {
    let spec = polynomial_roots(&char_poly(&m.with_bits(bits)), bits)?;
    if m.n() > 1 && spec.separation <= PrecisionReal::pow2(-(bits as i64) / 2, bits) {
        return Err(MatpowError::NearDegenerate {
            separation: spec.separation.to_f64(),
        });
    }
    Ok(spec)
}

#[derive(Debug, Clone)]
pub struct PowerOptions {
    /// Run the perturbation stage. Callers that know the spectrum is simple
    /// (or can tolerate clustered nodes whose powers vanish) may skip it.
    pub perturb: bool,
    /// Upper limit for the automatic precision increase after an
    /// ill-conditioned interpolation.
    pub max_bits: u32,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions {
            perturb: true,
            max_bits: 1 << 14,
        }
    }
}

/// Diagnostics from one spectral power computation.
#[derive(Debug, Clone, Default)]
pub struct PowerReport {
    pub working_bits: u32,
    pub perturbation_k: usize,
    pub t0_shift: u32,
    pub separation_log2: f64,
    pub imaginary_dropped: f64,
    pub retries: u32,
}

/// Default overflow bound `2^64`.
pub fn default_bound() -> PrecisionReal {
    PrecisionReal::pow2(64, 64)
}

/// `M^E` within `2^-p` (max entry) when `||M^E|| <= B`, else an overflow report.
pub fn matrix_power(
    m: &SquareMatrix,
    e: &BigUint,
    p: u32,
    bound: &PrecisionReal,
) -> Result<PowerResult<SquareMatrix>, MatpowError> {
    matrix_power_with(m, e, p, bound, &PowerOptions::default()).map(|(r, _)| r)
}

pub fn matrix_power_with(
    m: &SquareMatrix,
    e: &BigUint,
    p: u32,
    bound: &PrecisionReal,
    opts: &PowerOptions,
) -> Result<(PowerResult<SquareMatrix>, PowerReport), MatpowError> {
    let n = m.n();
    let mut report = PowerReport::default();
    if n == 0 {
        return Err(MatpowError::Input("empty matrix".into()));
    }
    if e.is_zero() {
        return Ok((PowerResult::Value(SquareMatrix::identity(n, p)), report));
    }
    if e.is_one() {
        return Ok((PowerResult::Value(m.with_bits(p)), report));
    }
    let base = m.with_bits(m.bits().max(p + GUARD_BITS));
    let (m0, extra) = if opts.perturb {
        let delta = PrecisionReal::pow2(-(p as i64) - 2, p + 2);
        let pert = perturb_to_distinct(&base, e, &delta)?;
        report.perturbation_k = pert.k;
        report.t0_shift = pert.t0_shift;
        (pert.matrix, pert.t0_shift)
    } else {
        (base, 0)
    };
    let loss = charpoly::leverrier_loss(n, &m0.row_sum_norm());
    let mut w = (p + GUARD_BITS + bit_len(e) + loss + extra).max(m0.bits());
    loop {
        report.working_bits = w;
        match spectral_power(&m0.with_bits(w), e, p, bound, w, &mut report) {
            Err(MatpowError::IllConditioned { needed_bits })
                if needed_bits > w && needed_bits <= opts.max_bits && report.retries < 3 =>
            {
                log::debug!("interpolation needs {needed_bits} bits, retrying");
                report.retries += 1;
                w = needed_bits + GUARD_BITS;
            }
            other => return other.map(|r| (r, report)),
        }
    }
}

fn spectral_power(
    m: &SquareMatrix,
    e: &BigUint,
    p: u32,
    bound: &PrecisionReal,
    w: u32,
    report: &mut PowerReport,
) -> Result<PowerResult<SquareMatrix>, MatpowError> {
    let coeffs = char_poly(m);
    let spec = polynomial_roots(&coeffs, w)?;
    report.separation_log2 = spec
        .separation
        .magnitude_log2()
        .map_or(f64::NEG_INFINITY, |v| v as f64);
    let poly = match power_interpolant(&spec, e, bound, p + GUARD_BITS)? {
        PowerResult::Value(poly) => poly,
        PowerResult::Overflow(o) => return Ok(PowerResult::Overflow(o)),
    };
    let v = poly_at_matrix(&poly.coeffs, m, p)?;
    report.imaginary_dropped = v.imaginary_dropped;
    Ok(PowerResult::Value(v.matrix.with_bits(p)))
}

/// Binary exponentiation at `p + GUARD + bits(E) * (log2 n + 1)` bits; reports
/// overflow once an intermediate max-entry norm exceeds `B^2`.
pub fn matrix_power_squaring(
    m: &SquareMatrix,
    e: &BigUint,
    p: u32,
    bound: &PrecisionReal,
) -> Result<PowerResult<SquareMatrix>, MatpowError> {
    let n = m.n();
    let lg = usize::BITS - n.max(1).leading_zeros();
    let w = p + GUARD_BITS + bit_len(e) * (lg + 1);
    let limit = bound.mul_to(bound, w);
    let overflow = |x: &SquareMatrix| -> Result<Option<OverflowReport>, MatpowError> {
        let norm = x.max_norm();
        if norm > limit {
            let est = log_real(&norm, 64).map_err(|source| MatpowError::Numerics {
                stage: Stage::Squaring,
                source,
            })?;
            return Ok(Some(OverflowReport {
                witness: 0,
                log_norm_estimate: est,
            }));
        }
        Ok(None)
    };
    let mut result = SquareMatrix::identity(n, w);
    let mut sq = m.with_bits(w);
    let nbits = e.bits();
    for i in 0..nbits {
        if e.bit(i) {
            result = result.mul_to(&sq, w);
            if let Some(o) = overflow(&result)? {
                return Ok(PowerResult::Overflow(o));
            }
        }
        if i + 1 < nbits {
            sq = sq.mul_to(&sq, w);
            if let Some(o) = overflow(&sq)? {
                return Ok(PowerResult::Overflow(o));
            }
        }
    }
    Ok(PowerResult::Value(result.with_bits(p)))
}
