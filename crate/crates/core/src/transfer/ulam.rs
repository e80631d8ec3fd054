//! Interval-level (degree-0) discretisations of the noisy transfer operator.

use std::f64::consts::SQRT_2;

use crate::kernel::{erf, gauss_legendre, normalization, normalization_f64, GaussianKernel, NoisySystem};
use crate::matpow::SquareMatrix;
use crate::numerics::PrecisionReal;

use super::TransferError;

/// Stationary cell masses of the `cells`-cell Ulam matrix of `sys`, in `f64`.
///
/// Each source cell is sampled at two Gauss points; the landing mass in each
/// target cell is exact through `erf`. The stationary vector comes from power
/// iteration until successive iterates differ by less than `1e-14` in L1.
pub fn ulam_invariant(sys: &NoisySystem, cells: usize) -> Result<Vec<f64>, TransferError> {
    let eps = sys.kernel.eps_f64();
    let h = 1.0 / cells as f64;
    let s = eps * SQRT_2;
    let offsets = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
    let mut q = vec![0.0f64; cells * cells];
    let mut cdf = vec![0.0f64; cells + 1];
    for j in 0..cells {
        let col = &mut q[j * cells..(j + 1) * cells];
        for off in offsets {
            let v = sys.map.eval_f64((j as f64 + off) * h);
            let c = normalization_f64(v, eps);
            for (k, e) in cdf.iter_mut().enumerate() {
                *e = libm::erf((k as f64 * h - v) / s);
            }
            for (i, q) in col.iter_mut().enumerate() {
                *q += 0.25 * c * (cdf[i + 1] - cdf[i]);
            }
        }
    }
    let mut p = vec![h; cells];
    for _ in 0..100_000 {
        let mut next = vec![0.0f64; cells];
        for (j, pj) in p.iter().enumerate() {
            let col = &q[j * cells..(j + 1) * cells];
            for (n, qv) in next.iter_mut().zip(col) {
                *n += qv * pj;
            }
        }
        let mass: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= mass);
        let change: f64 = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        p = next;
        if change < 1e-14 {
            return Ok(p);
        }
    }
    Err(TransferError::NoConvergence { residual: f64::NAN })
}

/// Column-stochastic cell-to-cell transition matrix at `bits`: entry `(i, j)`
/// is the probability of landing in cell `i` from a uniformly distributed
/// point of cell `j`, with the source average taken by an `nodes`-point
/// Gauss–Legendre rule.
pub fn interval_markov_matrix(
    map: &dyn Fn(&PrecisionReal, u32) -> PrecisionReal,
    kernel: &GaussianKernel,
    cells: usize,
    nodes: usize,
    bits: u32,
) -> SquareMatrix {
    let w = bits + 16;
    let eps = kernel.eps().with_bits(w);
    let s = eps.mul_to(&PrecisionReal::from_int(2, w).sqrt().expect("2 > 0"), w);
    let rule = gauss_legendre(nodes, w);
    let edges: Vec<PrecisionReal> = (0..=cells).map(|k| PrecisionReal::from_int(k as i64, w).div_i64(cells as i64)).collect();
    let mut m = SquareMatrix::zero(cells, bits);
    for j in 0..cells {
        let mid = (&edges[j] + &edges[j + 1]).shl(-1);
        let half = (&edges[j + 1] - &edges[j]).shl(-1);
        let mut col = vec![PrecisionReal::zero(w); cells];
        for (u, wt) in rule.nodes.iter().zip(&rule.weights) {
            let v = map(&(&mid + &half.mul_to(u, w)), w);
            let c = normalization(&v, &eps, w);
            let cdf: Vec<PrecisionReal> =
                edges.iter().map(|e| erf(&(e - &v).div_to(&s, w).expect("eps > 0"), w)).collect();
            // average over the source: weights sum to 2, erf differences carry a factor 1/2
            let f = c.mul_to(wt, w).shl(-2);
            for (i, slot) in col.iter_mut().enumerate() {
                *slot = &*slot + &f.mul_to(&(&cdf[i + 1] - &cdf[i]), w);
            }
        }
        for (i, v) in col.iter().enumerate() {
            m.set(i, j, &v.with_bits(bits));
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::kernel_eval_f64;
    use crate::taylor::{ratio, AnalyticMapSpec};

    #[test]
    fn constant_map_ulam_is_the_kernel() {
        let sys = NoisySystem::new(
            AnalyticMapSpec::constant(ratio(3, 10)),
            GaussianKernel::from_f64(0.1, 64).unwrap(),
        )
        .unwrap();
        let p = ulam_invariant(&sys, 256).unwrap();
        let h = 1.0 / 256.0;
        for (i, v) in p.iter().enumerate() {
            let x = (i as f64 + 0.5) * h;
            assert!((v / h - kernel_eval_f64(x, 0.3, 0.1)).abs() < 2e-3 * (1.0 + v / h));
        }
    }

    #[test]
    fn markov_columns_sum_to_one() {
        let k = GaussianKernel::from_f64(0.05, 64).unwrap();
        let f = |x: &PrecisionReal, b: u32| x.with_bits(b);
        let m = interval_markov_matrix(&f, &k, 8, 4, 80);
        for j in 0..8 {
            let s: f64 = (0..8).map(|i| m.get(i, j).to_f64()).sum();
            assert!((s - 1.0).abs() < 1e-15);
        }
    }
}
