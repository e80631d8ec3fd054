//! Real and complex integer powers via exp(E log x), with an overflow guard.

use std::f64::consts::LN_2;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use super::elementary::{arg, exp_real, log_real, pi, sin_cos, EXP_MAX_LOG2};
use super::{bit_len, NumericsError, OverflowReport, PrecisionComplex, PrecisionReal, GUARD_BITS};

/// A power, or the report that it exceeds the caller's bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PowerResult<T> {
    Value(T),
    Overflow(OverflowReport),
}

impl<T> PowerResult<T> {
    pub fn value(self) -> Option<T> {
        match self {
            PowerResult::Value(v) => Some(v),
            PowerResult::Overflow(_) => None,
        }
    }

    pub fn is_overflow(&self) -> bool {
        matches!(self, PowerResult::Overflow(_))
    }
}

/// Precision-independent check of `y > ln B`, plus a magnitude estimate in bits.
struct Budget {
    log_bound: PrecisionReal,
    /// Number of integer bits the result can carry (0 when the result is < 1).
    mag_bits: u32,
}

enum Coarse {
    Decided(Modulus),
    Refined(Budget, PrecisionReal),
}

fn budget(
    log_arg: impl Fn(u32) -> Result<PrecisionReal, NumericsError>,
    e: &BigUint,
    halve: bool,
    bound: &PrecisionReal,
    p: u32,
) -> Result<Coarse, NumericsError> {
    if bound.signum() <= 0 {
        return Err(NumericsError::Domain("bound must be positive".into()));
    }
    let eb = bit_len(e);
    let e_int = BigInt::from(e.clone());
    let scaled = |l: PrecisionReal| {
        let y = l.mul_int(&e_int);
        if halve {
            y.shl(-1)
        } else {
            y
        }
    };
    let log_bound = log_real(bound, p + GUARD_BITS)?;
    // coarse pass: E log x to within ~2^-60, enough to settle clear cases cheaply
    let y0 = scaled(log_arg(64 + eb)?);
    let slack = PrecisionReal::one(8);
    if y0 > &log_bound + &slack {
        return Ok(Coarse::Decided(Modulus::Overflow(OverflowReport {
            witness: 0,
            log_norm_estimate: y0.with_bits(64),
        })));
    }
    if y0.to_f64() < -((p + 2) as f64) * LN_2 - 1.0 {
        return Ok(Coarse::Decided(Modulus::Zero));
    }
    let m = (y0.to_f64() / LN_2).ceil();
    let mag_bits = if m > 0.0 { m as u32 + 2 } else { 0 };
    let wl = p + GUARD_BITS + eb + mag_bits + 4;
    let y = scaled(log_arg(wl)?);
    Ok(Coarse::Refined(Budget { log_bound, mag_bits }, y))
}

fn settle(c: Coarse, p: u32) -> Result<(Modulus, u32), NumericsError> {
    match c {
        Coarse::Decided(m) => Ok((m, 0)),
        Coarse::Refined(b, y) => Ok((finish_modulus(y, &b, p)?, b.mag_bits)),
    }
}

/// `x^E` within `2^-p`, or an overflow report when `E ln x > ln B`.
pub fn pow_real(
    x: &PrecisionReal,
    e: &BigUint,
    p: u32,
    bound: &PrecisionReal,
) -> Result<PowerResult<PrecisionReal>, NumericsError> {
    if x.signum() <= 0 {
        return Err(NumericsError::Domain("pow_real needs x > 0".into()));
    }
    if e.is_zero() || *x == PrecisionReal::one(x.bits()) {
        return Ok(PowerResult::Value(PrecisionReal::one(p)));
    }
    if e.is_one() {
        return Ok(PowerResult::Value(x.with_bits(p)));
    }
    let (m, _) = settle(budget(|w| log_real(x, w), e, false, bound, p)?, p)?;
    Ok(match m {
        Modulus::Overflow(o) => PowerResult::Overflow(o),
        Modulus::Zero => PowerResult::Value(PrecisionReal::zero(p)),
        Modulus::Log(y) => PowerResult::Value(exp_real(&y, p)?),
    })
}

enum Modulus {
    Overflow(OverflowReport),
    Zero,
    Log(PrecisionReal),
}

fn finish_modulus(y: PrecisionReal, b: &Budget, p: u32) -> Result<Modulus, NumericsError> {
    if y > b.log_bound {
        return Ok(Modulus::Overflow(OverflowReport {
            witness: 0,
            log_norm_estimate: y.with_bits(p.max(64)),
        }));
    }
    if y.to_f64() < -((p + 2) as f64) * LN_2 {
        return Ok(Modulus::Zero);
    }
    if y.abs() > PrecisionReal::pow2(EXP_MAX_LOG2 as i64, y.bits()) {
        return Err(NumericsError::ExpArgumentTooLarge(y.to_decimal_string()));
    }
    Ok(Modulus::Log(y))
}

/// `z^E` within `2^-p` (componentwise), or an overflow report when `|z|^E > B`.
pub fn pow_complex(
    z: &PrecisionComplex,
    e: &BigUint,
    p: u32,
    bound: &PrecisionReal,
) -> Result<PowerResult<PrecisionComplex>, NumericsError> {
    if e.is_zero() {
        if z.is_zero() {
            return Err(NumericsError::Domain("0^0 is undefined".into()));
        }
        return Ok(PowerResult::Value(PrecisionComplex::one(p)));
    }
    if e.is_one() {
        return Ok(PowerResult::Value(z.with_bits(p)));
    }
    if z.is_zero() {
        return Ok(PowerResult::Value(PrecisionComplex::zero(p)));
    }
    // |z| < 2^-(p/2) with E >= 2 already puts |z^E| below 2^-p
    if z.max_abs().magnitude_log2().unwrap_or(i64::MIN) < -(p as i64) / 2 - 1 {
        return Ok(PowerResult::Value(PrecisionComplex::zero(p)));
    }
    // exact |z|^2
    let r2 = z.with_bits(2 * z.bits()).norm_sqr();
    let (m, mag_bits) = settle(budget(|w| log_real(&r2, w), e, true, bound, p)?, p)?;
    let y = match m {
        Modulus::Overflow(o) => return Ok(PowerResult::Overflow(o)),
        Modulus::Zero => return Ok(PowerResult::Value(PrecisionComplex::zero(p))),
        Modulus::Log(y) => y,
    };
    let wr = p + GUARD_BITS;
    let r = exp_real(&y, wr)?;
    // phase E*theta reduced mod 2π
    let eb = bit_len(e);
    let wt = p + GUARD_BITS + eb + mag_bits + 4;
    let theta = arg(z, wt)?;
    let et = theta.mul_int(&BigInt::from(e.clone()));
    let wpi = wt + eb + 4;
    let two_pi = pi(wpi).shl(1);
    let et = et.with_bits(wpi);
    let q = et.div_to(&two_pi, 16)?.floor();
    let reduced = (&et - &two_pi.mul_int(&q)).with_bits(wt);
    let wc = wr + mag_bits;
    let (s, c) = sin_cos(&reduced, wc);
    let r = r.with_bits(wc);
    Ok(PowerResult::Value(PrecisionComplex {
        re: r.mul_to(&c, wc).with_bits(p),
        im: r.mul_to(&s, wc).with_bits(p),
    }))
}
