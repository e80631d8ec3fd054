use num_bigint::{BigInt, BigUint};

use crate::numerics::{PrecisionReal, GUARD_BITS};

use super::charpoly::{curve_point, discriminant_curve_eval};
use super::{MatpowError, SquareMatrix};

/// Outcome of moving a matrix along `(1 - t) M + t D` to separate its eigenvalues.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub matrix: SquareMatrix,
    /// Chosen sample index; the perturbation parameter is `k * t0`.
    pub k: usize,
    /// `t0 = 2^-t0_shift`.
    pub t0_shift: u32,
    pub discriminant: PrecisionReal,
}

/// Exponent `s` of the largest `t0 = 2^-s` with
/// `t0 <= delta / (100 n (n-1) 2^n E^2 ||D - M||)`; `None` when no perturbation
/// is needed (n = 1 or M = D).
fn step_shift(m: &SquareMatrix, e: &BigUint, delta: &PrecisionReal) -> Option<u32> {
    let n = m.n();
    let d = SquareMatrix::diag(
        &(1..=n)
            .map(|k| PrecisionReal::from_int(k as i64, m.bits()))
            .collect::<Vec<_>>(),
        m.bits(),
    );
    let dist = d.sub(m).max_norm();
    if n < 2 || dist.is_zero() {
        return None;
    }
    let e = BigInt::from(e.clone().max(BigUint::from(1u32)));
    let factor = BigInt::from(100 * n * (n - 1)) * (BigInt::from(1) << n) * &e * &e;
    let bits = delta.bits().max(m.bits()) + 64;
    let x = dist.with_bits(bits).mul_int(&factor).div_to(delta, bits).ok()?;
    let top = x.magnitude_log2()?;
    // 2^(top-1) <= x < 2^top; x exactly a power of two allows one step less
    let exact = x == PrecisionReal::pow2(top - 1, bits);
    Some((if exact { top - 1 } else { top }).max(0) as u32)
}

/// Choose `M0 = M(k t0)` with `k in 0..=n(n-1)` maximising the discriminant of
/// its characteristic polynomial, so `M0` has distinct eigenvalues and
/// `||M^E - M0^E|| <= delta`.
pub fn perturb_to_distinct(
    m: &SquareMatrix,
    e: &BigUint,
    delta: &PrecisionReal,
) -> Result<Perturbation, MatpowError> {
    let Some(shift) = step_shift(m, e, delta) else {
        let w = m.bits();
        let disc = discriminant_curve_eval(m, &PrecisionReal::zero(w));
        return Ok(Perturbation {
            matrix: m.clone(),
            k: 0,
            t0_shift: 0,
            discriminant: disc,
        });
    };
    let n = m.n();
    let samples = n * (n - 1);
    let base = m.bits() + shift + GUARD_BITS;
    let mut w = base;
    let cap = 16 * base;
    loop {
        let mut best: Option<(usize, PrecisionReal)> = None;
        for k in 0..=samples {
            let t = PrecisionReal::pow2(-(shift as i64), w).mul_i64(k as i64);
            let v = discriminant_curve_eval(&m.with_bits(w), &t);
            if best.as_ref().map_or(true, |(_, b)| v.abs() > b.abs()) {
                best = Some((k, v));
            }
        }
        let (k, disc) = best.expect("at least one sample");
        // a value within a few ulps of zero is indistinguishable from zero
        let resolved = disc
            .magnitude_log2()
            .is_some_and(|e| e > -(w as i64) / 2);
        if resolved {
            let t = PrecisionReal::pow2(-(shift as i64), w).mul_i64(k as i64);
            return Ok(Perturbation {
                matrix: curve_point(m, &t, w),
                k,
                t0_shift: shift,
                discriminant: disc,
            });
        }
        if w >= cap {
            return Err(MatpowError::DegeneratePerturbation);
        }
        log::debug!("discriminant unresolved at {w} bits, doubling");
        w = (2 * w).min(cap);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_target_is_left_alone() {
        let d = SquareMatrix::from_f64(3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0], 64);
        let p = perturb_to_distinct(&d, &BigUint::from(5u32), &PrecisionReal::pow2(-20, 64)).unwrap();
        assert_eq!(p.k, 0);
        assert_eq!(p.matrix, d);
    }

    #[test]
    fn identity_gets_split() {
        let i = SquareMatrix::identity(2, 64);
        let p = perturb_to_distinct(&i, &BigUint::from(16u32), &PrecisionReal::pow2(-20, 64)).unwrap();
        assert!(p.k > 0);
        assert!(p.discriminant.signum() > 0);
        let diff = p.matrix.max_abs_diff(&i.with_bits(p.matrix.bits()));
        assert!(diff.to_f64() > 0.0 && diff.to_f64() < 2f64.powi(-30));
    }
}
