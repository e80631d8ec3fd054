use num_bigint::BigUint;

use crate::numerics::{pow_complex, PowerResult, PrecisionComplex, PrecisionReal};

use super::{MatpowError, SquareMatrix, Spectrum, Stage};

/// Degree `< n` polynomial agreeing with `x^E` on a spectrum.
#[derive(Debug, Clone)]
pub struct PowerPolynomial {
    /// Ascending coefficients `c_0 .. c_{n-1}`.
    pub coeffs: Vec<PrecisionComplex>,
    pub exponent: BigUint,
    /// `max_k |c_k|`.
    pub coeff_bound: PrecisionReal,
    /// `max_i |p(l_i) - l_i^E|` measured after construction.
    pub node_residual: PrecisionReal,
    pub tolerance: PrecisionReal,
}

fn log2_f64(x: &PrecisionReal) -> f64 {
    match x.magnitude_log2() {
        None => f64::NEG_INFINITY,
        Some(e) => {
            // x / 2^e lies in [1/2, 1)
            let scaled = x.abs().shl(-e).to_f64();
            e as f64 + scaled.log2()
        }
    }
}

/// `log2(2^a + 2^b)`.
fn log2_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2
}

/// `prod_j (x - roots_j)` in ascending order.
fn from_roots(roots: &[&PrecisionComplex], bits: u32) -> Vec<PrecisionComplex> {
    let mut c = vec![PrecisionComplex::one(bits)];
    for r in roots {
        let mut next = vec![PrecisionComplex::zero(bits); c.len() + 1];
        for (k, ck) in c.iter().enumerate() {
            next[k + 1] = &next[k + 1] + ck;
            next[k] = &next[k] - &ck.mul_to(r, bits);
        }
        c = next;
    }
    c
}

fn eval(coeffs: &[PrecisionComplex], z: &PrecisionComplex, bits: u32) -> PrecisionComplex {
    let mut acc = PrecisionComplex::zero(bits);
    for c in coeffs.iter().rev() {
        acc = &acc.mul_to(z, bits) + c;
    }
    acc
}

/// Lagrange interpolant of `x^E` through the eigenvalues of `spec`.
///
/// Node values are computed with `pow_complex` at the spectrum's precision; if
/// any `|l_i|^E` exceeds `bound` the overflow report names that eigenvalue.
/// The result is accepted only if the basis conditioning leaves at least `p`
/// correct bits.
pub fn power_interpolant(
    spec: &Spectrum,
    e: &BigUint,
    bound: &PrecisionReal,
    p: u32,
) -> Result<PowerResult<PowerPolynomial>, MatpowError> {
    let lam = &spec.eigenvalues;
    let n = lam.len();
    let w = lam.iter().map(|z| z.bits()).max().unwrap_or(p);
    let mut values = Vec::with_capacity(n);
    for (i, z) in lam.iter().enumerate() {
        match pow_complex(z, e, w, bound).map_err(|source| MatpowError::Numerics {
            stage: Stage::Interpolate,
            source,
        })? {
            PowerResult::Value(v) => values.push(v),
            PowerResult::Overflow(mut o) => {
                o.witness = i;
                return Ok(PowerResult::Overflow(o));
            }
        }
    }
    let mut coeffs = vec![PrecisionComplex::zero(w); n];
    let mut log2_kappa = f64::NEG_INFINITY;
    for i in 0..n {
        if values[i].is_zero() {
            continue;
        }
        let others: Vec<&PrecisionComplex> = (0..n).filter(|&j| j != i).map(|j| &lam[j]).collect();
        let mut denom = PrecisionComplex::one(w);
        let mut growth = 0.0;
        for o in &others {
            let d = &lam[i] - o;
            denom = denom.mul_to(&d, w);
            growth += (1.0 + o.max_abs().to_f64()).log2();
        }
        if denom.is_zero() {
            return Err(MatpowError::IllConditioned { needed_bits: 2 * w });
        }
        let weight = values[i].div_to(&denom, w).map_err(|source| MatpowError::Numerics {
            stage: Stage::Interpolate,
            source,
        })?;
        let term = log2_f64(&weight.max_abs()) + growth;
        log2_kappa = log2_add(log2_kappa, term);
        for (c, b) in coeffs.iter_mut().zip(from_roots(&others, w)) {
            *c = &*c + &b.mul_to(&weight, w);
        }
    }
    if log2_kappa.is_finite() {
        let needed = p as f64 + log2_kappa.max(0.0) + 8.0;
        if needed > w as f64 {
            return Err(MatpowError::IllConditioned {
                needed_bits: needed.ceil() as u32,
            });
        }
    }
    let mut node_residual = PrecisionReal::zero(w);
    for (z, v) in lam.iter().zip(&values) {
        node_residual = node_residual.max((&eval(&coeffs, z, w) - v).max_abs());
    }
    let tolerance = PrecisionReal::pow2(-(p as i64), w);
    if node_residual > tolerance {
        let extra = log2_f64(&node_residual).ceil() as i64 + p as i64 + 8;
        return Err(MatpowError::IllConditioned {
            needed_bits: w + extra.max(8) as u32,
        });
    }
    let coeff_bound = coeffs
        .iter()
        .map(|c| c.max_abs())
        .max()
        .unwrap_or_else(|| PrecisionReal::zero(w));
    Ok(PowerResult::Value(PowerPolynomial {
        coeffs,
        exponent: e.clone(),
        coeff_bound,
        node_residual,
        tolerance,
    }))
}

/// Result of evaluating a complex-coefficient polynomial at a real matrix.
#[derive(Debug, Clone)]
pub struct MatrixValue {
    pub matrix: SquareMatrix,
    /// Upper bound on the discarded imaginary parts (max entry).
    pub imaginary_dropped: f64,
}

/// Horner evaluation of `p` at a real matrix. The imaginary part is bounded
/// through the norm of `M` and dropped when below `2^-(p/4)`; otherwise it is
/// evaluated and must itself be that small.
pub fn poly_at_matrix(
    poly: &[PrecisionComplex],
    m: &SquareMatrix,
    p: u32,
) -> Result<MatrixValue, MatpowError> {
    let n = m.n();
    let w = m.bits();
    let horner = |part: &dyn Fn(&PrecisionComplex) -> PrecisionReal| {
        let mut acc = SquareMatrix::zero(n, w);
        for (k, c) in poly.iter().enumerate().rev() {
            if k + 1 < poly.len() {
                acc = acc.mul_to(m, w);
            }
            acc = acc.add_identity(&part(c));
        }
        acc
    };
    let re = horner(&|c| c.re.clone());
    let norm = log2_f64(&m.row_sum_norm()).max(0.0);
    let mut bound = f64::NEG_INFINITY;
    for (k, c) in poly.iter().enumerate() {
        let t = log2_f64(&c.im) + k as f64 * norm;
        bound = log2_add(bound, t);
    }
    let limit = -(p as f64) / 4.0;
    let imaginary_dropped = if bound <= limit {
        bound.exp2()
    } else {
        let im = horner(&|c| c.im.clone());
        let v = im.max_norm().to_f64();
        if v > limit.exp2() {
            return Err(MatpowError::ImaginaryResidual(v));
        }
        v
    };
    if imaginary_dropped > 0.0 {
        log::debug!("dropped imaginary part of size <= {imaginary_dropped:e}");
    }
    Ok(MatrixValue {
        matrix: re,
        imaginary_dropped,
    })
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;

    use super::*;

    fn spec(vals: &[f64]) -> Spectrum {
        Spectrum {
            eigenvalues: vals
                .iter()
                .map(|&v| PrecisionComplex::from_f64(v, 0.0, 128))
                .collect(),
            separation: PrecisionReal::one(128),
            residual: PrecisionReal::zero(128),
        }
    }

    #[test]
    fn constant_for_single_node() {
        let p = power_interpolant(&spec(&[1.0]), &BigUint::from(77u32), &PrecisionReal::pow2(64, 64), 64)
            .unwrap()
            .value()
            .unwrap();
        assert_eq!(p.coeffs.len(), 1);
        assert!((p.coeffs[0].re.to_f64() - 1.0).abs() < 1e-30);
    }

    #[test]
    fn two_point_closed_form() {
        let s = Spectrum {
            eigenvalues: vec![
                PrecisionComplex::from_real(PrecisionReal::from_ratio(&BigRational::new(1.into(), 2.into()), 128)),
                PrecisionComplex::from_real(PrecisionReal::from_ratio(&BigRational::new(1.into(), 3.into()), 128)),
            ],
            ..spec(&[])
        };
        let p = power_interpolant(&s, &BigUint::from(4u32), &PrecisionReal::pow2(64, 64), 96)
            .unwrap()
            .value()
            .unwrap();
        // slope (1/16 - 1/81) / (1/2 - 1/3)
        let slope = (1.0 / 16.0 - 1.0 / 81.0) * 6.0;
        assert!((p.coeffs[1].re.to_f64() - slope).abs() < 1e-15);
        assert!((p.coeffs[0].re.to_f64() - (1.0 / 16.0 - slope / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn cayley_hamilton() {
        let d = SquareMatrix::from_f64(2, &[1.0, 0.0, 0.0, 2.0], 96);
        let poly: Vec<PrecisionComplex> = [2.0, -3.0, 1.0]
            .iter()
            .map(|&c| PrecisionComplex::from_f64(c, 0.0, 96))
            .collect();
        let v = poly_at_matrix(&poly, &d, 64).unwrap();
        assert!(v.matrix.max_norm().is_zero());
        let x = [0.0, 1.0].map(|c| PrecisionComplex::from_f64(c, 0.0, 96));
        assert_eq!(poly_at_matrix(&x, &d, 64).unwrap().matrix, d);
    }
}
