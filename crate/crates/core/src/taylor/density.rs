use std::fmt::Write;

use crate::numerics::PrecisionReal;

use super::poly::{poly_eval_f64, poly_integral};
use super::TaylorError;

/// A polynomial in `(x - center)` valid on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorPiece {
    pub center: PrecisionReal,
    pub lo: PrecisionReal,
    pub hi: PrecisionReal,
    pub coeffs: Vec<PrecisionReal>,
    pub tail_bound: PrecisionReal,
}

impl TaylorPiece {
    pub fn eval_f64(&self, x: f64) -> f64 {
        let c: Vec<f64> = self.coeffs.iter().map(|v| v.to_f64()).collect();
        poly_eval_f64(&c, x - self.center.to_f64())
    }

    /// Exact integral over `[a, b] ∩ [lo, hi]`.
    pub fn integral(&self, a: &PrecisionReal, b: &PrecisionReal) -> PrecisionReal {
        let bits = self.coeffs.iter().map(|c| c.bits()).max().unwrap_or(64);
        let lo = (&self.lo).max(a).clone();
        let hi = (&self.hi).min(b).clone();
        if hi <= lo {
            return PrecisionReal::zero(bits);
        }
        poly_integral(&self.coeffs, &(&lo - &self.center), &(&hi - &self.center), bits)
    }
}

/// A density on [0, 1] given piecewise by Taylor polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseTaylorDensity {
    pub pieces: Vec<TaylorPiece>,
    pub degree: usize,
}

impl PiecewiseTaylorDensity {
    /// Check that the pieces tile [0, 1] in order.
    pub fn new(pieces: Vec<TaylorPiece>) -> Result<Self, TaylorError> {
        let first = pieces
            .first()
            .ok_or_else(|| TaylorError::Invalid("density needs at least one piece".into()))?;
        if !first.lo.is_zero() {
            return Err(TaylorError::Invalid("first piece must start at 0".into()));
        }
        for w in pieces.windows(2) {
            if w[0].hi != w[1].lo {
                return Err(TaylorError::Invalid("pieces must tile [0, 1] without gaps".into()));
            }
        }
        let last = pieces.last().expect("non-empty");
        if last.hi != PrecisionReal::one(last.hi.bits()) {
            return Err(TaylorError::Invalid("last piece must end at 1".into()));
        }
        let degree = pieces.iter().map(|p| p.coeffs.len().saturating_sub(1)).max().unwrap_or(0);
        Ok(PiecewiseTaylorDensity { pieces, degree })
    }

    /// `A` equal pieces with the given coefficients about each midpoint.
    pub fn uniform_partition(coeffs: Vec<Vec<PrecisionReal>>, bits: u32) -> Result<Self, TaylorError> {
        let a = coeffs.len() as i64;
        let pieces = coeffs
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                let i = i as i64;
                TaylorPiece {
                    center: PrecisionReal::from_int(2 * i + 1, bits).div_i64(2 * a),
                    lo: PrecisionReal::from_int(i, bits).div_i64(a),
                    hi: PrecisionReal::from_int(i + 1, bits).div_i64(a),
                    coeffs: c,
                    tail_bound: PrecisionReal::zero(bits),
                }
            })
            .collect();
        Self::new(pieces)
    }

    /// Index of the piece containing `x`; interior boundaries go to the left piece.
    pub fn piece_index(&self, x: f64) -> usize {
        let idx = self.pieces.partition_point(|p| p.hi.to_f64() < x);
        idx.min(self.pieces.len() - 1)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.pieces[self.piece_index(x)].eval_f64(x)
    }

    /// Exact integral over `[a, b]`.
    pub fn weight(&self, a: &PrecisionReal, b: &PrecisionReal) -> PrecisionReal {
        let bits = a.bits().max(b.bits());
        self.pieces
            .iter()
            .fold(PrecisionReal::zero(bits), |acc, p| &acc + &p.integral(a, b))
    }

    pub fn mass(&self) -> PrecisionReal {
        let bits = self.pieces[0].lo.bits();
        self.weight(&PrecisionReal::zero(bits), &PrecisionReal::one(bits))
    }

    /// Minimum over a uniform grid of `points + 1` points.
    pub fn grid_min(&self, points: usize) -> (f64, f64) {
        (0..=points)
            .map(|i| {
                let x = i as f64 / points as f64;
                (x, self.eval_f64(x))
            })
            .fold((0.0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
    }

    /// Scale every coefficient by `k`.
    pub fn scaled(&self, k: &PrecisionReal) -> Self {
        let mut out = self.clone();
        for p in &mut out.pieces {
            for c in &mut p.coeffs {
                *c = c.mul_to(k, c.bits());
            }
        }
        out
    }

    /// CSV `x,density` on `points + 1` equally spaced points.
    pub fn to_csv(&self, points: usize) -> String {
        let mut s = String::from("x,density\n");
        for i in 0..=points {
            let x = i as f64 / points as f64;
            writeln!(s, "{x},{:.17e}", self.eval_f64(x)).expect("writing to a string");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: f64) -> PrecisionReal {
        PrecisionReal::from_f64(v, 64)
    }

    #[test]
    fn uniform_density() {
        let d = PiecewiseTaylorDensity::uniform_partition(vec![vec![r(1.0)]; 4], 64).unwrap();
        for x in [0.0, 0.25, 0.3, 1.0] {
            assert_eq!(d.eval_f64(x), 1.0);
        }
        assert_eq!(d.mass().to_f64(), 1.0);
        let w = d.weight(&r(0.2), &r(0.7)).to_f64(); assert!((w - 0.5).abs() < 1e-15, "{w}");
    }

    #[test]
    fn single_linear_piece() {
        let d = PiecewiseTaylorDensity::uniform_partition(vec![vec![r(0.0), r(1.0)]], 64).unwrap();
        assert_eq!(d.eval_f64(0.75), 0.25);
    }

    #[test]
    fn boundary_resolves_left() {
        let d = PiecewiseTaylorDensity::uniform_partition(vec![vec![r(1.0)], vec![r(3.0)]], 64).unwrap();
        assert_eq!(d.eval_f64(0.5), 1.0);
        assert_eq!(d.eval_f64(0.5 + 1e-12), 3.0);
    }
}
