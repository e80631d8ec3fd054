//! Characteristic polynomials (Faddeev–LeVerrier) and discriminants.

use crate::numerics::{PrecisionReal, GUARD_BITS};

use super::SquareMatrix;

/// Extra bits lost by Faddeev–LeVerrier on an `n x n` matrix with row-sum norm `norm`.
pub(crate) fn leverrier_loss(n: usize, norm: &PrecisionReal) -> u32 {
    let lg = norm.magnitude_log2().unwrap_or(0).max(0) as u32;
    n as u32 * (2 + lg)
}

/// Monic characteristic polynomial `det(xI - M)` as `[c_0, ..., c_{n-1}, 1]`.
///
/// Exact for integer matrices; otherwise every coefficient is within
/// `2^-bits` of the true value.
pub fn char_poly(m: &SquareMatrix) -> Vec<PrecisionReal> {
    let n = m.n();
    let p = m.bits();
    let w = p + GUARD_BITS + leverrier_loss(n, &m.row_sum_norm());
    let a = m.with_bits(w);
    let mut coeffs = vec![PrecisionReal::zero(w); n + 1];
    coeffs[n] = PrecisionReal::one(w);
    // M_k = A M_{k-1} + c_{n-k+1} I, c_{n-k} = -tr(A M_k) / k
    let mut mk = SquareMatrix::identity(n, w);
    for k in 1..=n {
        let am = a.mul_to(&mk, w);
        let c = -am.trace().div_i64(k as i64);
        coeffs[n - k] = c.clone();
        if k < n {
            mk = am.add_identity(&c);
        }
    }
    coeffs.into_iter().map(|c| c.with_bits(p)).collect()
}

/// Evaluate a real-coefficient polynomial (ascending order) at `x`.
pub fn poly_eval_real(coeffs: &[PrecisionReal], x: &PrecisionReal) -> PrecisionReal {
    let bits = coeffs.iter().map(|c| c.bits()).max().unwrap_or(64).max(x.bits());
    let mut acc = PrecisionReal::zero(bits);
    for c in coeffs.iter().rev() {
        acc = &acc.mul_to(x, bits) + c;
    }
    acc
}

/// Determinant by Gaussian elimination with partial pivoting at `bits`.
pub(crate) fn determinant(rows: &mut [Vec<PrecisionReal>], bits: u32) -> PrecisionReal {
    let n = rows.len();
    for r in rows.iter_mut() {
        for v in r.iter_mut() {
            *v = v.with_bits(bits);
        }
    }
    let mut det = PrecisionReal::one(bits);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| rows[i][col].abs().cmp(&rows[j][col].abs()))
            .expect("non-empty range");
        if rows[piv][col].is_zero() {
            return PrecisionReal::zero(bits);
        }
        if piv != col {
            rows.swap(piv, col);
            det = -det;
        }
        let pivot = rows[col][col].clone();
        det = det.mul_to(&pivot, bits);
        for r in col + 1..n {
            if rows[r][col].is_zero() {
                continue;
            }
            let f = rows[r][col].div_to(&pivot, bits).expect("pivot is non-zero");
            for c in col..n {
                let d = f.mul_to(&rows[col][c], bits);
                rows[r][c] = &rows[r][c] - &d;
            }
        }
    }
    det
}

/// Discriminant `prod_{i<j} (r_i - r_j)^2` of a monic polynomial given in
/// ascending order, via the Sylvester resultant with its derivative.
pub fn discriminant(coeffs: &[PrecisionReal], bits: u32) -> PrecisionReal {
    let n = coeffs.len() - 1;
    if n <= 1 {
        return PrecisionReal::one(bits);
    }
    let deriv: Vec<PrecisionReal> = (1..=n).map(|k| coeffs[k].mul_i64(k as i64)).collect();
    // Sylvester rows use descending coefficient order
    let size = 2 * n - 1;
    let mut rows = Vec::with_capacity(size);
    for s in 0..n - 1 {
        let mut row = vec![PrecisionReal::zero(bits); size];
        for (k, c) in coeffs.iter().rev().enumerate() {
            row[s + k] = c.clone();
        }
        rows.push(row);
    }
    for s in 0..n {
        let mut row = vec![PrecisionReal::zero(bits); size];
        for (k, c) in deriv.iter().rev().enumerate() {
            row[s + k] = c.clone();
        }
        rows.push(row);
    }
    let res = determinant(&mut rows, bits);
    if (n * (n - 1) / 2) % 2 == 1 {
        -res
    } else {
        res
    }
}

/// Discriminant of the characteristic polynomial of `M(t) = (1 - t) M + t D`,
/// `D = diag(1, ..., n)`, evaluated at `M.bits()` precision.
pub fn discriminant_curve_eval(m: &SquareMatrix, t: &PrecisionReal) -> PrecisionReal {
    let mt = curve_point(m, t, m.bits().max(t.bits()));
    let coeffs = char_poly(&mt);
    let n = m.n();
    // the Sylvester elimination loses roughly the coefficient size per row
    let big = coeffs
        .iter()
        .filter_map(|c| c.magnitude_log2())
        .max()
        .unwrap_or(0)
        .max(0) as u32;
    let w = mt.bits() + GUARD_BITS + 2 * n as u32 * (big + 2 + n.ilog2() + 1);
    discriminant(
        &coeffs.iter().map(|c| c.with_bits(w)).collect::<Vec<_>>(),
        w,
    )
    .with_bits(mt.bits())
}

/// `(1 - t) M + t D` at precision `bits`.
pub(crate) fn curve_point(m: &SquareMatrix, t: &PrecisionReal, bits: u32) -> SquareMatrix {
    let n = m.n();
    let m = m.with_bits(bits);
    let d = SquareMatrix::diag(
        &(1..=n)
            .map(|k| PrecisionReal::from_int(k as i64, bits))
            .collect::<Vec<_>>(),
        bits,
    );
    m.add(&d.sub(&m).scale(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[PrecisionReal]) -> Vec<f64> {
        v.iter().map(|c| c.to_f64()).collect()
    }

    #[test]
    fn diagonal_and_companion() {
        let d = SquareMatrix::from_f64(2, &[1.0, 0.0, 0.0, 2.0], 64);
        assert_eq!(ints(&char_poly(&d)), vec![2.0, -3.0, 1.0]);
        // companion of x^3 - x - 1
        let c = SquareMatrix::from_f64(3, &[0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0], 64);
        assert_eq!(ints(&char_poly(&c)), vec![-1.0, -1.0, 0.0, 1.0]);
    }

    #[test]
    fn discriminant_of_diagonal_end_point() {
        let m = SquareMatrix::from_f64(3, &[0.3, 1.0, -2.0, 0.5, 0.1, 0.0, 4.0, 0.0, 1.0], 96);
        let v = discriminant_curve_eval(&m, &PrecisionReal::one(96));
        assert!((v.to_f64() - 4.0).abs() < 1e-20);
    }

    #[test]
    fn discriminant_of_identity_curve() {
        // M = I, eigenvalues 1 and 1 + t
        let i = SquareMatrix::identity(2, 96);
        for t in [0.0, 0.125, 0.5, 0.75] {
            let v = discriminant_curve_eval(&i, &PrecisionReal::from_f64(t, 96));
            assert!((v.to_f64() - t * t).abs() < 1e-20, "t = {t}");
        }
    }
}
