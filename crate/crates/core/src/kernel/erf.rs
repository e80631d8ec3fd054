use std::f64::consts::LOG2_E;

use crate::numerics::{pi, PrecisionReal};

/// `2/sqrt(pi)` at `bits`.
fn two_over_sqrt_pi(bits: u32) -> PrecisionReal {
    let s = pi(bits + 4).sqrt().expect("pi > 0");
    PrecisionReal::from_int(2, bits + 4).div_to(&s, bits).expect("nonzero")
}

/// `erf(t)` within `2^-p`.
///
/// Maclaurin series with enough guard bits to absorb the `e^{t^2}` growth of
/// the partial sums; past the point where `erfc(t) < 2^-(p+2)` the result
/// is `±1`.
pub fn erf(t: &PrecisionReal, p: u32) -> PrecisionReal {
    if t.is_negative() {
        return -erf(&-t, p);
    }
    let tf = t.to_f64();
    // erfc(t) <= exp(-t^2) once t >= 1
    if tf >= 1.0 && tf * tf * LOG2_E > (p + 2) as f64 {
        return PrecisionReal::one(p);
    }
    let t2f = tf * tf;
    let guard = (t2f * LOG2_E).ceil() as u32 + 24 + (64 - (t2f as u64 + 64).leading_zeros());
    let w = p + guard;
    let x = t.with_bits(w);
    let x2 = x.square();
    let tiny = PrecisionReal::pow2(-(w as i64), w);
    let mut term = x.clone(); // t^{2n+1} / n!
    let mut sum = PrecisionReal::zero(w);
    let mut n: i64 = 0;
    loop {
        let contrib = term.div_i64(2 * n + 1);
        sum = if n % 2 == 0 { &sum + &contrib } else { &sum - &contrib };
        n += 1;
        term = term.mul_to(&x2, w).div_i64(n);
        if n as f64 > t2f && term.abs() < tiny {
            break;
        }
    }
    sum.mul_to(&two_over_sqrt_pi(w), w).with_bits(p)
}

/// `erfc(t) = 1 - erf(t)` within `2^-p` (absolute).
pub fn erfc(t: &PrecisionReal, p: u32) -> PrecisionReal {
    (&PrecisionReal::one(p + 2) - &erf(t, p + 2)).with_bits(p)
}
