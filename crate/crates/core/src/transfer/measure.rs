use crate::numerics::PrecisionReal;
use crate::taylor::{PiecewiseTaylorDensity, TaylorPiece};

/// Mass of `d` on `[a, b]`, integrated exactly piece by piece.
pub fn measure_weight(d: &PiecewiseTaylorDensity, a: &PrecisionReal, b: &PrecisionReal) -> PrecisionReal {
    d.weight(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMode {
    /// Sup of `|d1 - d2|`.
    LInf,
    /// `½ ∫ |d1 - d2|`.
    TotalVariation,
}

const SAMPLES: usize = 64;

struct F64Piece {
    center: f64,
    coeffs: Vec<f64>,
}

impl F64Piece {
    fn new(p: &TaylorPiece) -> Self {
        F64Piece { center: p.center.to_f64(), coeffs: p.coeffs.iter().map(|c| c.to_f64()).collect() }
    }

    fn eval(&self, x: f64) -> f64 {
        let t = x - self.center;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    fn deriv(&self, x: f64) -> f64 {
        let t = x - self.center;
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * t + k as f64 * c)
    }

    fn antiderivative(&self, x: f64) -> f64 {
        let t = x - self.center;
        self.coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (k, c)| acc * t + c / (k + 1) as f64)
            * t
    }
}

/// Sub-intervals on which both densities are single polynomials.
fn common_pieces<'a>(
    d1: &'a PiecewiseTaylorDensity,
    d2: &'a PiecewiseTaylorDensity,
) -> Vec<(f64, f64, &'a TaylorPiece, &'a TaylorPiece)> {
    let mut cuts: Vec<f64> = d1
        .pieces
        .iter()
        .chain(&d2.pieces)
        .flat_map(|p| [p.lo.to_f64(), p.hi.to_f64()])
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            (w[0], w[1], &d1.pieces[d1.piece_index(mid)], &d2.pieces[d2.piece_index(mid)])
        })
        .collect()
}

/// Distance between two densities on [0, 1].
///
/// `LInf` samples the difference on each common piece and adds half the grid
/// step times the sampled slope, so it bounds the sup from above. `TV` splits
/// each piece at the sign changes of the difference and integrates exactly.
pub fn distance(d1: &PiecewiseTaylorDensity, d2: &PiecewiseTaylorDensity, mode: DistanceMode) -> PrecisionReal {
    let mut total = 0.0f64;
    for (lo, hi, p1, p2) in common_pieces(d1, d2) {
        let (a, b) = (F64Piece::new(p1), F64Piece::new(p2));
        let diff = |x: f64| a.eval(x) - b.eval(x);
        let h = (hi - lo) / SAMPLES as f64;
        let xs: Vec<f64> = (0..=SAMPLES).map(|k| lo + k as f64 * h).collect();
        match mode {
            DistanceMode::LInf => {
                let vmax = xs.iter().map(|&x| diff(x).abs()).fold(0.0, f64::max);
                let slope = xs.iter().map(|&x| (a.deriv(x) - b.deriv(x)).abs()).fold(0.0, f64::max);
                total = total.max(vmax + 0.5 * h * slope);
            }
            DistanceMode::TotalVariation => {
                let prim = |x: f64| a.antiderivative(x) - b.antiderivative(x);
                let mut left = lo;
                for w in xs.windows(2) {
                    let (fa, fb) = (diff(w[0]), diff(w[1]));
                    if fa * fb < 0.0 {
                        let (mut u, mut v) = (w[0], w[1]);
                        for _ in 0..80 {
                            let mid = 0.5 * (u + v);
                            if diff(u) * diff(mid) <= 0.0 {
                                v = mid;
                            } else {
                                u = mid;
                            }
                        }
                        let root = 0.5 * (u + v);
                        total += (prim(root) - prim(left)).abs();
                        left = root;
                    } else if fb == 0.0 && w[1] < hi {
                        // a root on a sample point splits there
                        total += (prim(w[1]) - prim(left)).abs();
                        left = w[1];
                    }
                }
                total += (prim(hi) - prim(left)).abs();
            }
        }
    }
    if mode == DistanceMode::TotalVariation {
        total *= 0.5;
    }
    PrecisionReal::from_f64(total, 64)
}

/// Mass of `d` in each of `cells` equal cells.
pub fn cell_masses(d: &PiecewiseTaylorDensity, cells: usize) -> Vec<f64> {
    let pieces: Vec<(f64, f64, F64Piece)> =
        d.pieces.iter().map(|p| (p.lo.to_f64(), p.hi.to_f64(), F64Piece::new(p))).collect();
    (0..cells)
        .map(|c| {
            let (a, b) = (c as f64 / cells as f64, (c + 1) as f64 / cells as f64);
            pieces
                .iter()
                .filter(|(lo, hi, _)| *hi > a && *lo < b)
                .map(|(lo, hi, p)| p.antiderivative(b.min(*hi)) - p.antiderivative(a.max(*lo)))
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn density(coeffs: Vec<Vec<f64>>) -> PiecewiseTaylorDensity {
        PiecewiseTaylorDensity::uniform_partition(
            coeffs
                .into_iter()
                .map(|c| c.into_iter().map(|v| PrecisionReal::from_f64(v, 64)).collect())
                .collect(),
            64,
        )
        .unwrap()
    }

    #[test]
    fn weights() {
        let d = density(vec![vec![1.0]]);
        let w = measure_weight(&d, &PrecisionReal::from_f64(0.2, 64), &PrecisionReal::from_f64(0.7, 64));
        assert!((w.to_f64() - 0.5).abs() < 1e-15);
        assert!((measure_weight(&d, &PrecisionReal::zero(64), &PrecisionReal::one(64)).to_f64() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distances() {
        let u = density(vec![vec![1.0], vec![1.0]]);
        assert_eq!(distance(&u, &u, DistanceMode::LInf).to_f64(), 0.0);
        assert_eq!(distance(&u, &u, DistanceMode::TotalVariation).to_f64(), 0.0);
        // 1 + 0.2 (x - 1/4) on the left, 1 - 0.2 (x - 3/4) on the right, against uniform
        let v = density(vec![vec![1.0, 0.2], vec![1.0, -0.2]]);
        let tv = distance(&u, &v, DistanceMode::TotalVariation).to_f64();
        // each half contributes ∫|0.2(x - c)| = 0.0125 before halving
        assert!((tv - 0.0125).abs() < 1e-12, "{tv}");
        let linf = distance(&u, &v, DistanceMode::LInf).to_f64();
        assert!(linf >= 0.05 && linf < 0.051);
        assert!(tv <= linf);
    }

    #[test]
    fn cell_masses_sum_to_mass() {
        let v = density(vec![vec![1.0, 0.2], vec![1.0, -0.2]]);
        let m = cell_masses(&v, 10);
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
}
