//! log, exp, arctan, sin/cos and the complex argument.

use std::f64::consts::{LN_2, LOG2_E, PI};
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use super::real::shift_round;
use super::{NumericsError, PrecisionComplex, PrecisionReal, GUARD_BITS};

/// `exp_real` refuses arguments with `|x| > 2^EXP_MAX_LOG2`.
pub const EXP_MAX_LOG2: u32 = 20;

type Slot = OnceLock<Mutex<Option<PrecisionReal>>>;

static LN2: Slot = OnceLock::new();
static PI_CONST: Slot = OnceLock::new();

fn cached(slot: &'static Slot, bits: u32, compute: fn(u32) -> PrecisionReal) -> PrecisionReal {
    let m = slot.get_or_init(|| Mutex::new(None));
    let mut g = m.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(v) = g.as_ref() {
        if v.bits() >= bits + 4 {
            return v.with_bits(bits);
        }
    }
    let want = (bits + 4)
        .max(g.as_ref().map_or(0, |v| v.bits().saturating_mul(2)))
        .max(256);
    let v = compute(want);
    let out = v.with_bits(bits);
    *g = Some(v);
    out
}

fn below(x: &PrecisionReal, e: i64) -> bool {
    match x.magnitude_log2() {
        None => true,
        Some(m) => m < e,
    }
}

/// `ln(1 + z)` for `0 <= z < 1/2` by the alternating series, at `w` bits.
fn log1p_series(z: &PrecisionReal, w: u32) -> PrecisionReal {
    let mut pow = z.with_bits(w);
    let mut sum = PrecisionReal::zero(w);
    let mut k = 1i64;
    while !below(&pow, -(w as i64)) {
        let term = pow.div_i64(k);
        sum = if k % 2 == 1 { &sum + &term } else { &sum - &term };
        pow = pow.mul_to(z, w);
        k += 1;
    }
    sum
}

fn compute_ln2(w: u32) -> PrecisionReal {
    let ww = w + GUARD_BITS;
    let s2 = PrecisionReal::from_int(2, ww).sqrt().expect("positive");
    let z = &s2 - &PrecisionReal::one(ww);
    log1p_series(&z, ww).shl(1).with_bits(w)
}

/// ln 2 within `2^-bits`.
pub fn ln2(bits: u32) -> PrecisionReal {
    cached(&LN2, bits, compute_ln2)
}

/// Alternating arctan series, valid for `|t| <= 0.6`.
fn atan_series(t: &PrecisionReal, w: u32) -> PrecisionReal {
    let t = t.with_bits(w);
    let t2 = t.square();
    let mut pow = t;
    let mut sum = PrecisionReal::zero(w);
    let mut k = 0i64;
    while !below(&pow, -(w as i64)) {
        let term = pow.div_i64(2 * k + 1);
        sum = if k % 2 == 0 { &sum + &term } else { &sum - &term };
        pow = pow.mul_to(&t2, w);
        k += 1;
    }
    sum
}

fn compute_pi(w: u32) -> PrecisionReal {
    let ww = w + GUARD_BITS;
    let a = atan_series(&PrecisionReal::from_int(1, ww).div_i64(5), ww);
    let b = atan_series(&PrecisionReal::from_int(1, ww).div_i64(239), ww);
    (&a.mul_i64(16) - &b.mul_i64(4)).with_bits(w)
}

/// pi within `2^-bits`, from 16 atan(1/5) - 4 atan(1/239).
pub fn pi(bits: u32) -> PrecisionReal {
    cached(&PI_CONST, bits, compute_pi)
}

/// Natural logarithm within `2^-p`.
pub fn log_real(x: &PrecisionReal, p: u32) -> Result<PrecisionReal, NumericsError> {
    if x.signum() <= 0 {
        return Err(NumericsError::Domain(format!(
            "log of non-positive value {}",
            x.to_f64()
        )));
    }
    let w = p + GUARD_BITS;
    // 2^e <= x < 2^(e+1)
    let e = x.mantissa().bits() as i64 - 1 - x.bits() as i64;
    let m = PrecisionReal::from_mantissa(
        shift_round(x.mantissa(), w as i64 - x.bits() as i64 - e),
        w,
    );
    let three_halves = BigInt::from(3) << (w as usize - 1);
    // x = 2^(v/2) * y with y in [1, 1.5)
    let (v, y) = if *m.mantissa() < three_halves {
        (2 * e, m)
    } else {
        let s2 = PrecisionReal::from_int(2, w + 4).sqrt().expect("positive");
        (2 * e + 1, m.div_to(&s2, w)?)
    };
    let z = &y - &PrecisionReal::one(w);
    let series = log1p_series(&z, w);
    let vbits = 64 - v.unsigned_abs().leading_zeros() + 1;
    let wv = w + vbits;
    let half_log2 = ln2(wv).mul_i64(v).shl(-1);
    Ok((&series.with_bits(wv) + &half_log2).with_bits(p))
}

/// e^x within `2^-p`, for `|x| <= 2^EXP_MAX_LOG2`.
pub fn exp_real(x: &PrecisionReal, p: u32) -> Result<PrecisionReal, NumericsError> {
    if !below(x, EXP_MAX_LOG2 as i64 + 1)
        && x.abs() > PrecisionReal::pow2(EXP_MAX_LOG2 as i64, x.bits())
    {
        return Err(NumericsError::ExpArgumentTooLarge(x.to_decimal_string()));
    }
    if x.is_zero() {
        return Ok(PrecisionReal::one(p));
    }
    let n = (x.to_f64() / LN_2).round() as i64;
    if n < -(p as i64) - 4 {
        return Ok(PrecisionReal::zero(p));
    }
    let w = p + GUARD_BITS + n.max(0) as u32;
    let wr = w + 24;
    let r = &x.with_bits(wr) - &ln2(wr).mul_i64(n);
    // halve the reduced argument s times, sum the series, then square back
    let s = ((w as f64).sqrt() / 2.0).clamp(4.0, 40.0) as u32;
    let ws = w + s + 8;
    let rr = r.with_bits(ws + s).shl(-(s as i64)).with_bits(ws);
    let terms = taylor_terms_for_exp(&rr, ws);
    let mut term = PrecisionReal::one(ws);
    let mut sum = PrecisionReal::one(ws);
    for k in 1..=terms {
        term = term.mul_to(&rr, ws).div_i64(k as i64);
        sum = &sum + &term;
    }
    for _ in 0..s {
        sum = sum.square();
    }
    Ok(sum.shl(n).with_bits(p))
}

/// Smallest k with e * |r|^(k+1) / (k+1)! < 2^-(w+1).
fn taylor_terms_for_exp(r: &PrecisionReal, w: u32) -> u64 {
    if r.is_zero() {
        return 0;
    }
    let lr = r.abs().to_f64().log2();
    let mut k = 0u64;
    let mut log_fact = 0.0f64;
    loop {
        let kk = (k + 1) as f64;
        log_fact += kk.log2();
        if LOG2_E + kk * lr - log_fact < -(w as f64) - 1.0 {
            return k;
        }
        k += 1;
    }
}

/// arctan within `2^-p` for any real argument.
pub fn arctan(t: &PrecisionReal, p: u32) -> Result<PrecisionReal, NumericsError> {
    let w = p + GUARD_BITS;
    let tw = t.with_bits(w);
    let one = PrecisionReal::one(w);
    let a = tw.abs();
    let six_tenths = PrecisionReal::from_int(6, w).div_i64(10);
    let res = if a <= six_tenths {
        atan_series(&tw, w)
    } else if a <= one {
        // atan t = pi/4 + atan((t-1)/(t+1)), applied to |t|
        let u = (&a - &one).div_to(&(&a + &one), w)?;
        let v = &pi(w).shl(-2) + &atan_series(&u, w);
        if t.is_negative() {
            -v
        } else {
            v
        }
    } else {
        let inv = one.div_to(&a, w)?;
        let inner = if inv <= six_tenths {
            atan_series(&inv, w)
        } else {
            arctan(&inv, w)?
        };
        let v = &pi(w).shl(-1) - &inner;
        if t.is_negative() {
            -v
        } else {
            v
        }
    };
    Ok(res.with_bits(p))
}

/// `(sin r, cos r)` by Taylor series for `|r| <= 1`, at `w` bits.
fn sin_cos_series(r: &PrecisionReal, w: u32) -> (PrecisionReal, PrecisionReal) {
    let mut s = PrecisionReal::zero(w);
    let mut c = PrecisionReal::zero(w);
    let mut term = PrecisionReal::one(w);
    let mut j = 0i64;
    loop {
        let neg = (j / 2) % 2 == 1;
        let t = if neg { -&term } else { term.clone() };
        if j % 2 == 0 {
            c = &c + &t;
        } else {
            s = &s + &t;
        }
        j += 1;
        term = term.mul_to(r, w).div_i64(j);
        if j > 2 && below(&term, -(w as i64)) {
            break;
        }
    }
    (s, c)
}

/// `(sin θ, cos θ)` within `2^-p`.
pub fn sin_cos(theta: &PrecisionReal, p: u32) -> (PrecisionReal, PrecisionReal) {
    let w = p + GUARD_BITS;
    let ib = theta.magnitude_log2().unwrap_or(0).max(0) as u32;
    let wp = w + ib + 8;
    let half_pi = pi(wp + 1).shl(-1).with_bits(wp);
    let th = theta.with_bits(wp);
    let q = th
        .div_to(&half_pi, wp)
        .expect("pi/2 is non-zero")
        .round();
    let r = (&th - &half_pi.mul_int(&q)).with_bits(w + 4);
    let (s, c) = sin_cos_series(&r, w + 4);
    let quadrant = q.mod_floor(&BigInt::from(4)).to_u8().unwrap_or(0);
    let (s, c) = match quadrant {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    };
    (s.with_bits(p), c.with_bits(p))
}

pub fn sin(theta: &PrecisionReal, p: u32) -> PrecisionReal {
    sin_cos(theta, p).0
}

pub fn cos(theta: &PrecisionReal, p: u32) -> PrecisionReal {
    sin_cos(theta, p).1
}

/// Argument of `z` in `[0, 2π)` within `2^-p`.
///
/// The point is rotated by a multiple of π/6 into the sector
/// `0 <= arg < π/6`, where `y/x < 0.6` and the arctan series applies.
pub fn arg(z: &PrecisionComplex, p: u32) -> Result<PrecisionReal, NumericsError> {
    let big = z.max_abs();
    let e = match big.magnitude_log2() {
        Some(e) => e,
        None => return Err(NumericsError::IllConditioned("argument of zero".into())),
    };
    if e < -(p as i64) / 2 {
        return Err(NumericsError::IllConditioned(format!(
            "|z| below 2^-{} makes the argument ill-conditioned",
            p / 2
        )));
    }
    let w = p + GUARD_BITS + 8;
    // scale so that the larger component lies in [1/2, 1)
    let scale = |x: &PrecisionReal| x.with_bits(w + e.max(0) as u32).shl(-e).with_bits(w);
    let a = scale(&z.re);
    let b = scale(&z.im);
    let mut ang = b.to_f64().atan2(a.to_f64());
    if ang < 0.0 {
        ang += 2.0 * PI;
    }
    let v = ((ang / (PI / 6.0)).floor() as i64).clamp(0, 11);
    let half = PrecisionReal::one(w).shl(-1);
    let s3h = PrecisionReal::from_int(3, w + 2)
        .sqrt()
        .expect("positive")
        .shl(-1)
        .with_bits(w);
    let zero = PrecisionReal::zero(w);
    let one = PrecisionReal::one(w);
    let (cv, sv) = match v {
        0 => (one.clone(), zero.clone()),
        1 => (s3h.clone(), half.clone()),
        2 => (half.clone(), s3h.clone()),
        3 => (zero.clone(), one.clone()),
        4 => (-&half, s3h.clone()),
        5 => (-&s3h, half.clone()),
        6 => (-&one, zero.clone()),
        7 => (-&s3h, -&half),
        8 => (-&half, -&s3h),
        9 => (zero.clone(), -&one),
        10 => (half.clone(), -&s3h),
        _ => (s3h.clone(), -&half),
    };
    // (a + ib) * e^{-i v π/6}
    let x = &a.mul_to(&cv, w) + &b.mul_to(&sv, w);
    let y = &b.mul_to(&cv, w) - &a.mul_to(&sv, w);
    if x.signum() <= 0 {
        return Err(NumericsError::IllConditioned("sector selection failed".into()));
    }
    let t = y.div_to(&x, w)?;
    if t.abs().to_f64() > 0.6 {
        return Err(NumericsError::IllConditioned("sector selection failed".into()));
    }
    let pw = pi(w + 4);
    let mut theta = &atan_series(&t, w) + &pw.mul_i64(v).div_i64(6).with_bits(w);
    let two_pi = pw.shl(1).with_bits(w);
    if theta.is_negative() {
        theta = &theta + &two_pi;
    } else if theta >= two_pi {
        theta = &theta - &two_pi;
    }
    Ok(theta.with_bits(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &PrecisionReal, b: &PrecisionReal, e: i64) -> bool {
        (a - b).abs() <= PrecisionReal::pow2(e, a.bits().max(b.bits()))
    }

    #[test]
    fn log_of_one_is_zero() {
        assert!(log_real(&PrecisionReal::one(64), 64).unwrap().is_zero());
    }

    #[test]
    fn log_rejects_non_positive() {
        assert!(log_real(&PrecisionReal::zero(64), 64).is_err());
        assert!(log_real(&PrecisionReal::from_int(-2, 64), 64).is_err());
    }

    #[test]
    fn exp_of_zero_is_one() {
        assert_eq!(exp_real(&PrecisionReal::zero(64), 64).unwrap(), PrecisionReal::one(64));
    }

    #[test]
    fn exp_log_roundtrip() {
        for s in ["2", "0.001", "12345.678", "1e-9"] {
            let x = PrecisionReal::parse_decimal(s, 100).unwrap();
            let l = log_real(&x, 100).unwrap();
            let back = exp_real(&l, 100).unwrap();
            assert!(close(&back, &x, -100 + 2 + 14), "{s}");
        }
    }

    #[test]
    fn exp_limits() {
        let big = PrecisionReal::from_int(1 << 21, 64);
        assert!(exp_real(&big, 64).is_err());
        let neg = PrecisionReal::from_int(-1000, 64);
        assert!(exp_real(&neg, 64).unwrap().is_zero());
    }

    #[test]
    fn pi_matches_f64() {
        assert!((pi(128).to_f64() - PI).abs() < 1e-15);
        assert!((ln2(128).to_f64() - LN_2).abs() < 1e-16);
    }

    #[test]
    fn arctan_ranges() {
        for t in [-7.5, -1.0, -0.8, -0.3, 0.0, 0.2, 0.6, 0.9, 3.0, 100.0] {
            let v = arctan(&PrecisionReal::from_f64(t, 80), 80).unwrap();
            assert!((v.to_f64() - f64::atan(t)).abs() < 1e-15, "{t}");
        }
    }

    #[test]
    fn sin_cos_values() {
        for t in [-20.0, -3.0, -0.5, 0.0, 0.7, 1.6, 3.2, 4.9, 1000.0] {
            let (s, c) = sin_cos(&PrecisionReal::from_f64(t, 80), 80);
            assert!((s.to_f64() - f64::sin(t)).abs() < 1e-13, "{t}");
            assert!((c.to_f64() - f64::cos(t)).abs() < 1e-13, "{t}");
        }
    }

    #[test]
    fn arg_all_sectors() {
        for k in 0..48 {
            let th = 2.0 * PI * (k as f64 + 0.37) / 48.0;
            let z = PrecisionComplex::from_f64(th.cos() * 3.0, th.sin() * 3.0, 80);
            let a = arg(&z, 80).unwrap().to_f64();
            assert!((a - th).abs() < 1e-13, "{k}: {a} vs {th}");
        }
        let minus_one = PrecisionComplex::from_f64(-1.0, 0.0, 80);
        assert!(close(&arg(&minus_one, 80).unwrap(), &pi(80), -78));
        assert!(arg(&PrecisionComplex::zero(80), 80).is_err());
    }
}
