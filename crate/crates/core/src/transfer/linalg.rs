use crate::matpow::SquareMatrix;
use crate::numerics::PrecisionReal;

use super::TransferError;

/// Solve `A x = b` by Gaussian elimination with partial pivoting at `bits`.
pub(crate) fn solve_linear(
    mut a: Vec<Vec<PrecisionReal>>,
    mut b: Vec<PrecisionReal>,
    bits: u32,
) -> Result<Vec<PrecisionReal>, TransferError> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().cmp(&a[y][col].abs()))
            .expect("non-empty range");
        if a[piv][col].is_zero() {
            return Err(TransferError::Singular);
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let p = a[col][col].clone();
        for row in col + 1..n {
            if a[row][col].is_zero() {
                continue;
            }
            let f = a[row][col].div_to(&p, bits).expect("pivot nonzero");
            for k in col..n {
                let t = f.mul_to(&a[col][k], bits);
                a[row][k] = &a[row][k] - &t;
            }
            let t = f.mul_to(&b[col], bits);
            b[row] = &b[row] - &t;
        }
    }
    let mut x = vec![PrecisionReal::zero(bits); n];
    for row in (0..n).rev() {
        let mut s = b[row].clone();
        for k in row + 1..n {
            s = &s - &a[row][k].mul_to(&x[k], bits);
        }
        x[row] = s.div_to(&a[row][row], bits).expect("pivot nonzero");
    }
    Ok(x)
}

/// The fixed point of `m` normalised by `ω·v = 1`.
///
/// Replaces the `anchor` row of `m - I` with `ω`. When `ω^T m = ω^T` that row
/// is a combination of the others, so nothing is lost. Fails if the residual
/// `||m v - v||∞` exceeds `2^-(bits/2)`.
pub fn stationary_vector(
    m: &SquareMatrix,
    omega: &[PrecisionReal],
    anchor: usize,
    bits: u32,
) -> Result<(Vec<PrecisionReal>, f64), TransferError> {
    let n = m.n();
    let w = bits + 64;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row: Vec<PrecisionReal> = (0..n).map(|j| m.get(i, j).with_bits(w)).collect();
        row[i] = &row[i] - &PrecisionReal::one(w);
        rows.push(row);
    }
    rows[anchor] = omega.iter().map(|o| o.with_bits(w)).collect();
    let mut rhs = vec![PrecisionReal::zero(w); n];
    rhs[anchor] = PrecisionReal::one(w);
    let v: Vec<PrecisionReal> = solve_linear(rows, rhs, w)?.into_iter().map(|x| x.with_bits(bits)).collect();
    let mv = m.mul_vec(&v);
    let residual = mv
        .iter()
        .zip(&v)
        .map(|(a, b)| (a - b).abs())
        .max()
        .map(|r| r.to_f64())
        .unwrap_or(0.0);
    if residual > 2f64.powi(-(bits as i32) / 2) {
        return Err(TransferError::NoConvergence { residual });
    }
    Ok((v, residual))
}
