//! Dense polynomial arithmetic on ascending coefficient vectors.

use crate::numerics::PrecisionReal;

use super::TaylorError;

pub fn poly_mul(a: &[PrecisionReal], b: &[PrecisionReal], bits: u32) -> Vec<PrecisionReal> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![PrecisionReal::zero(bits); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = &out[i + j] + &x.mul_to(y, bits);
        }
    }
    out
}

/// `a^k` by repeated squaring; fails if the degree would exceed `cap`.
pub fn poly_pow(
    a: &[PrecisionReal],
    k: u32,
    bits: u32,
    cap: usize,
) -> Result<Vec<PrecisionReal>, TaylorError> {
    let deg = a.len().saturating_sub(1);
    if deg * k as usize > cap {
        return Err(TaylorError::DegreeCap {
            needed: deg * k as usize,
            cap,
        });
    }
    let mut result = vec![PrecisionReal::one(bits)];
    let mut base = a.to_vec();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = poly_mul(&result, &base, bits);
        }
        e >>= 1;
        if e > 0 {
            base = poly_mul(&base, &base, bits);
        }
    }
    Ok(result)
}

/// `a(b(x))`.
pub fn poly_compose(
    a: &[PrecisionReal],
    b: &[PrecisionReal],
    bits: u32,
    cap: usize,
) -> Result<Vec<PrecisionReal>, TaylorError> {
    let deg = a.len().saturating_sub(1) * b.len().saturating_sub(1);
    if deg > cap {
        return Err(TaylorError::DegreeCap { needed: deg, cap });
    }
    let mut acc: Vec<PrecisionReal> = Vec::new();
    for c in a.iter().rev() {
        acc = poly_mul(&acc, b, bits);
        if acc.is_empty() {
            acc.push(PrecisionReal::zero(bits));
        }
        acc[0] = &acc[0] + c;
    }
    Ok(acc)
}

/// Antiderivative vanishing at 0.
pub fn poly_antiderivative(a: &[PrecisionReal], bits: u32) -> Vec<PrecisionReal> {
    let mut out = vec![PrecisionReal::zero(bits)];
    for (k, c) in a.iter().enumerate() {
        out.push(c.with_bits(bits).div_i64(k as i64 + 1));
    }
    out
}

pub fn poly_eval(a: &[PrecisionReal], x: &PrecisionReal, bits: u32) -> PrecisionReal {
    let mut acc = PrecisionReal::zero(bits);
    for c in a.iter().rev() {
        acc = &acc.mul_to(x, bits) + c;
    }
    acc
}

pub fn poly_eval_f64(a: &[f64], x: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// `int_lo^hi a(x) dx`.
pub fn poly_integral(
    a: &[PrecisionReal],
    lo: &PrecisionReal,
    hi: &PrecisionReal,
    bits: u32,
) -> PrecisionReal {
    let anti = poly_antiderivative(a, bits);
    &poly_eval(&anti, hi, bits) - &poly_eval(&anti, lo, bits)
}

/// Coefficients of `a(x + shift)`.
pub fn poly_shift(a: &[PrecisionReal], shift: &PrecisionReal, bits: u32) -> Vec<PrecisionReal> {
    // synthetic division repeated: Taylor shift in O(n^2)
    let mut c: Vec<PrecisionReal> = a.iter().map(|v| v.with_bits(bits)).collect();
    let n = c.len();
    for i in 0..n {
        for j in (i..n.saturating_sub(1)).rev() {
            let t = c[j + 1].mul_to(shift, bits);
            c[j] = &c[j] + &t;
        }
    }
    c
}
