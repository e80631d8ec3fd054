use num_bigint::BigInt;

use crate::numerics::{PrecisionReal, GUARD_BITS};

use super::{AnalyticMapSpec, TaylorError, TaylorPiece};

/// Largest evaluation precision finite differences may request.
pub const FINITE_DIFF_BUDGET: u32 = 1 << 16;

/// Taylor coefficients `b_0..b_degree` of the logistic function about a point
/// where it takes the value `f0`, from `F' = F (1 - F)`.
pub fn logistic_series(f0: &PrecisionReal, degree: usize, bits: u32) -> Vec<PrecisionReal> {
    let mut b = vec![f0.with_bits(bits)];
    for k in 0..degree {
        let mut conv = PrecisionReal::zero(bits);
        for j in 0..=k {
            conv = &conv + &b[j].mul_to(&b[k - j], bits);
        }
        b.push((&b[k] - &conv).div_i64(k as i64 + 1));
    }
    b
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut r = BigInt::from(1);
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// `k`-th Taylor coefficient of `f` about `x_c` within `delta`, from a
/// `k`-point forward difference with step
/// `tau <= delta eta^-(k+1) k^-(k+2) 2^-k` (rounded down to a power of two).
///
/// Near the right end of [0, 1] the stencil is mirrored to `x_c - i tau`.
pub fn finite_diff_coefficient(
    f: &AnalyticMapSpec,
    x_c: &PrecisionReal,
    k: usize,
    delta: &PrecisionReal,
) -> Result<PrecisionReal, TaylorError> {
    let dlog = -delta.to_f64().log2();
    let out_bits = (dlog.ceil() as u32).max(1) + 8;
    if k == 0 {
        return Ok(f.eval(x_c, out_bits + GUARD_BITS).with_bits(out_bits));
    }
    let eta = f.eta().max(1e-300);
    let kf = k as f64;
    let log2_tau = -dlog - (kf + 1.0) * eta.log2() - (kf + 2.0) * kf.log2() - kf;
    let s = (-log2_tau).ceil().max(1.0) as u32;
    let needed = 4.0 * (kf * s as f64 + dlog);
    if needed > FINITE_DIFF_BUDGET as f64 {
        return Err(TaylorError::PrecisionExhausted {
            needed: needed.ceil() as u32,
            budget: FINITE_DIFF_BUDGET,
        });
    }
    let w = needed.ceil() as u32 + GUARD_BITS;
    let tau = PrecisionReal::pow2(-(s as i64), w);
    let end = &x_c.with_bits(w) + &tau.mul_i64(k as i64);
    let backward = end > PrecisionReal::one(w);
    let mut acc = PrecisionReal::zero(w);
    for i in 0..=k {
        let step = tau.mul_i64(i as i64);
        let x = if backward {
            &x_c.with_bits(w) - &step
        } else {
            &x_c.with_bits(w) + &step
        };
        let term = f.eval(&x, w).mul_int(&binomial(k, i));
        if (k - i) % 2 == 0 {
            acc = &acc + &term;
        } else {
            acc = &acc - &term;
        }
    }
    if backward && k % 2 == 1 {
        acc = -acc;
    }
    let fact: BigInt = (1..=k).map(BigInt::from).product();
    // divide by k! tau^k; tau^k = 2^(-s k) is an exact shift
    let v = acc.shl(s as i64 * k as i64).div_int(&fact);
    Ok(v.with_bits(out_bits))
}

/// Coefficients of a convergent series about `center` on `[center - radius, center + radius]`.
pub struct SeriesSource<'a> {
    pub center: PrecisionReal,
    pub radius: PrecisionReal,
    pub eta: f64,
    /// Degree when the series is a polynomial.
    pub exact_degree: Option<usize>,
    pub coeff: &'a dyn Fn(usize) -> PrecisionReal,
}

/// Truncate to degree `m` with tail bound `(eta r)^(m+1) / (1 - eta r)`, which
/// is at most `2^-m` once the diameter is below `1 / (2 eta)`.
pub fn truncate_series(src: &SeriesSource, m: usize) -> Result<TaylorPiece, TaylorError> {
    let bits = src.center.bits().max(src.radius.bits());
    let lo = &src.center - &src.radius;
    let hi = &src.center + &src.radius;
    if let Some(d) = src.exact_degree {
        if d <= m {
            return Ok(TaylorPiece {
                center: src.center.clone(),
                lo,
                hi,
                coeffs: (0..=d).map(|k| (src.coeff)(k)).collect(),
                tail_bound: PrecisionReal::zero(bits),
            });
        }
    }
    let r = src.radius.to_f64();
    let limit = 1.0 / (2.0 * src.eta);
    if 2.0 * r >= limit {
        return Err(TaylorError::Diameter { diam: 2.0 * r, limit });
    }
    let q = src.eta * r;
    let tail = q.powi(m as i32 + 1) / (1.0 - q);
    // round the bound up so it stays a bound after conversion
    let tail = PrecisionReal::from_f64(tail * (1.0 + 1e-12), bits)
        + PrecisionReal::pow2(-(bits as i64), bits);
    Ok(TaylorPiece {
        center: src.center.clone(),
        lo,
        hi,
        coeffs: (0..=m).map(|k| (src.coeff)(k)).collect(),
        tail_bound: tail,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::super::map::{ratio, BlackBox};
    use super::*;

    #[test]
    fn affine_map_coefficients() {
        let f = AnalyticMapSpec::Polynomial(vec![ratio(1, 1), ratio(2, 1)]);
        let x = PrecisionReal::from_f64(0.3, 64);
        let d = PrecisionReal::pow2(-30, 64);
        let a: Vec<f64> = (0..3)
            .map(|k| finite_diff_coefficient(&f, &x, k, &d).unwrap().to_f64())
            .collect();
        assert!((a[0] - 1.6).abs() < 1e-9 && (a[1] - 2.0).abs() < 1e-9 && a[2].abs() < 1e-9);
    }

    #[test]
    fn right_edge_uses_backward_stencil() {
        let inv = AnalyticMapSpec::BlackBox(BlackBox {
            name: "1/(2-x)".into(),
            eval: Arc::new(|x: &PrecisionReal, bits| {
                (&PrecisionReal::from_int(2, bits) - x).recip().unwrap().with_bits(bits)
            }),
            eta: 1.0,
        });
        let x = PrecisionReal::one(64);
        let d = PrecisionReal::pow2(-30, 64);
        for k in 1..4 {
            let a = finite_diff_coefficient(&inv, &x, k, &d).unwrap().to_f64();
            assert!((a - 1.0).abs() < 1e-9, "k = {k}: {a}");
        }
    }

    #[test]
    fn logistic_series_matches_derivatives() {
        // at 0: F = 1/2, F' = 1/4, F'' = 0, F''' = -1/8
        let b = logistic_series(&PrecisionReal::from_f64(0.5, 64), 3, 64);
        let v: Vec<f64> = b.iter().map(|x| x.to_f64()).collect();
        assert_eq!(v, vec![0.5, 0.25, 0.0, -1.0 / 48.0]);
    }

    #[test]
    fn geometric_tail_is_certified() {
        let coeff = |k: usize| PrecisionReal::pow2(-(k as i64), 64);
        let src = SeriesSource {
            center: PrecisionReal::from_f64(0.5, 64),
            radius: PrecisionReal::from_f64(0.25, 64),
            eta: 0.5,
            exact_degree: None,
            coeff: &coeff,
        };
        let piece = truncate_series(&src, 10).unwrap();
        let tail = piece.tail_bound.to_f64();
        assert!(tail <= 2f64.powi(-10));
        for i in 0..100 {
            let h = -0.25 + 0.5 * i as f64 / 99.0;
            let exact = 1.0 / (1.0 - h / 2.0);
            let approx: f64 = (0..=10).map(|k| (h / 2.0).powi(k)).sum();
            assert!((exact - approx).abs() <= tail);
        }
        let wide = SeriesSource { radius: PrecisionReal::one(64), ..src };
        assert!(truncate_series(&wide, 10).is_err());
    }
}
