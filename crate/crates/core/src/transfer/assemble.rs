//! Transfer-matrix entries `P[(i,l),(j,m)] = r^{l+1} ∫_{-1}^{1} u^m D_l(f(x_j + r u) - x_i) du`,
//! where `D_l(w) = ∂_x^l K(x_i + w → x)|_{x=x_i} / l!` and both the source
//! and target densities use the scaled basis `((x - x_c)/r)^k`.

use crate::kernel::{gauss_legendre, gaussian, normalization, ExpansionContext, NoisySystem, EXPANSION_CAP};
use crate::matpow::SquareMatrix;
use crate::numerics::PrecisionReal;
use crate::taylor::poly_eval;

use super::{Partition, TransferError};

/// Largest Gauss–Legendre rule tried per source interval.
const MAX_NODES: usize = 1024;

/// The degree-`N` transfer matrix of a noisy system over a partition.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    partition: Partition,
    degree: usize,
    bits: u32,
    /// Row-major entries before mass correction.
    raw: Vec<PrecisionReal>,
    /// Accuracy each raw entry was assembled to.
    pub entry_tol: f64,
    /// Quadrature nodes used per source interval.
    pub nodes: Vec<usize>,
}

impl TransferMatrix {
    pub fn partition(&self) -> Partition {
        self.partition
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn dim(&self) -> usize {
        self.partition.len() * (self.degree + 1)
    }

    pub fn index(&self, i: usize, l: usize) -> usize {
        i * (self.degree + 1) + l
    }

    pub fn raw_entry(&self, i: usize, l: usize, j: usize, m: usize) -> &PrecisionReal {
        &self.raw[self.index(i, l) * self.dim() + self.index(j, m)]
    }

    /// The leading block for a smaller degree.
    pub fn truncated(&self, degree: usize) -> TransferMatrix {
        assert!(degree <= self.degree, "cannot raise the degree by truncation");
        let a = self.partition.len();
        let n = a * (degree + 1);
        let mut raw = Vec::with_capacity(n * n);
        for i in 0..a {
            for l in 0..=degree {
                for j in 0..a {
                    for m in 0..=degree {
                        raw.push(self.raw_entry(i, l, j, m).clone());
                    }
                }
            }
        }
        TransferMatrix {
            partition: self.partition,
            degree,
            bits: self.bits,
            raw,
            entry_tol: self.entry_tol,
            nodes: self.nodes.clone(),
        }
    }

    /// `ω_(i,l) = ∫_{a_i} ((x - x_i)/r)^l dx`: the mass of each basis function.
    pub fn mass_weights(&self, bits: u32) -> Vec<PrecisionReal> {
        mass_weights(self.partition, self.degree, bits)
    }

    pub fn raw_matrix(&self) -> SquareMatrix {
        SquareMatrix::from_entries(self.dim(), &self.raw, self.bits)
    }

    /// The matrix with each column's mass deficit spread over the `l = 0`
    /// entries, so `ω^T P = ω^T` up to rounding. Returns the largest
    /// correction applied.
    pub fn mass_conserving(&self) -> (SquareMatrix, f64) {
        let n = self.dim();
        let a = self.partition.len() as i64;
        let w = self.bits + 32;
        let omega = self.mass_weights(w);
        let mut m = self.raw_matrix();
        let mut worst = 0f64;
        for col in 0..n {
            let mut s = PrecisionReal::zero(w);
            for (row, om) in omega.iter().enumerate() {
                if !om.is_zero() {
                    s = &s + &m.get(row, col).mul_to(om, w);
                }
            }
            // A intervals of width 1/A each absorb the deficit as a constant
            let delta = (&omega[col] - &s).with_bits(self.bits);
            worst = worst.max(delta.abs().to_f64());
            for i in 0..a as usize {
                let row = self.index(i, 0);
                let v = &m.get(row, col) + &delta;
                m.set(row, col, &v);
            }
        }
        (m, worst)
    }
}

pub(crate) fn mass_weights(partition: Partition, degree: usize, bits: u32) -> Vec<PrecisionReal> {
    let a = partition.len() as i64;
    let mut out = Vec::with_capacity(partition.len() * (degree + 1));
    for _ in 0..partition.len() {
        for l in 0..=degree {
            out.push(if l % 2 == 0 {
                PrecisionReal::one(bits).div_i64(a * (l as i64 + 1))
            } else {
                PrecisionReal::zero(bits)
            });
        }
    }
    out
}

fn entry_bits(delta_entry: f64) -> Result<u32, TransferError> {
    if !(delta_entry > 0.0 && delta_entry < 1.0) {
        return Err(TransferError::Invalid(format!("entry tolerance must lie in (0, 1), got {delta_entry}")));
    }
    Ok((-delta_entry.log2()).ceil() as u32 + 4)
}

/// Entries of source interval `j` with an `nodes`-point rule, indexed
/// `[(i * (N+1) + l) * (N+1) + m]`.
fn column_block(
    sys: &NoisySystem,
    partition: Partition,
    degree: usize,
    j: usize,
    nodes: usize,
    wq: u32,
) -> Vec<PrecisionReal> {
    let a = partition.len();
    let d1 = degree + 1;
    let r = partition.radius(wq);
    let xj = partition.center(j, wq);
    let eps = sys.kernel.eps().with_bits(wq);
    let inv_eps = PrecisionReal::one(wq).div_to(&eps, wq).expect("eps > 0");
    // r (r/ε)^l / l!
    let mut scale = Vec::with_capacity(d1);
    let mut s = r.clone();
    let r_eps = r.mul_to(&inv_eps, wq);
    for l in 0..d1 {
        scale.push(s.clone());
        s = s.mul_to(&r_eps, wq).div_i64(l as i64 + 1);
    }
    let centers: Vec<PrecisionReal> = (0..a).map(|i| partition.center(i, wq)).collect();
    let rule = gauss_legendre(nodes, wq);
    let mut out = vec![PrecisionReal::zero(wq); a * d1 * d1];
    let mut h = vec![PrecisionReal::zero(wq); d1];
    for (u, wt) in rule.nodes.iter().zip(&rule.weights) {
        let y = &xj + &r.mul_to(u, wq);
        let v = sys.map.eval(&y, wq);
        let c = normalization(&v, &eps, wq);
        let mut um = Vec::with_capacity(d1);
        let mut t = wt.clone();
        for _ in 0..d1 {
            um.push(t.clone());
            t = t.mul_to(u, wq);
        }
        for (i, xi) in centers.iter().enumerate() {
            let wv = &v - xi;
            let g = gaussian(&wv, &eps, wq);
            if g.is_zero() {
                continue;
            }
            let g = g.mul_to(&c, wq);
            let z = wv.mul_to(&inv_eps, wq);
            // probabilists' Hermite polynomials He_l(z)
            h[0] = PrecisionReal::one(wq);
            if d1 > 1 {
                h[1] = z.clone();
            }
            for l in 1..degree {
                h[l + 1] = &z.mul_to(&h[l], wq) - &h[l - 1].mul_i64(l as i64);
            }
            for l in 0..d1 {
                let dl = g.mul_to(&h[l], wq).mul_to(&scale[l], wq);
                let base = (i * d1 + l) * d1;
                for (m, um) in um.iter().enumerate() {
                    out[base + m] = &out[base + m] + &dl.mul_to(um, wq);
                }
            }
        }
    }
    out
}

/// Assemble the degree-`N` transfer matrix with every entry within
/// `delta_entry`, stored at `bits`.
///
/// Each source interval is integrated by Gauss–Legendre rules of doubling
/// size until two successive rules agree to `delta_entry / 4`.
pub fn assemble_transfer_matrix(
    sys: &NoisySystem,
    partition: Partition,
    degree: usize,
    delta_entry: f64,
    bits: u32,
) -> Result<TransferMatrix, TransferError> {
    let eb = entry_bits(delta_entry)?;
    let wq = eb + 48 + 4 * degree as u32;
    let a = partition.len();
    let d1 = degree + 1;
    let n = a * d1;
    let tol = PrecisionReal::from_f64(delta_entry / 4.0, wq);
    let mut raw = vec![PrecisionReal::zero(bits); n * n];
    let mut used = Vec::with_capacity(a);
    for j in 0..a {
        let mut nodes = 16;
        let mut prev = column_block(sys, partition, degree, j, nodes, wq);
        loop {
            nodes *= 2;
            let cur = column_block(sys, partition, degree, j, nodes, wq);
            let diff = prev
                .iter()
                .zip(&cur)
                .map(|(x, y)| (x - y).abs())
                .max()
                .unwrap_or_else(|| PrecisionReal::zero(wq));
            prev = cur;
            if diff <= tol {
                break;
            }
            if nodes >= MAX_NODES {
                return Err(TransferError::Quadrature { column: j, nodes, change: diff.to_f64() });
            }
        }
        log::debug!("source interval {j}: {nodes} quadrature nodes");
        used.push(nodes);
        for i in 0..a {
            for l in 0..d1 {
                for m in 0..d1 {
                    raw[(i * d1 + l) * n + j * d1 + m] = prev[(i * d1 + l) * d1 + m].with_bits(bits);
                }
            }
        }
    }
    Ok(TransferMatrix { partition, degree, bits, raw, entry_tol: delta_entry, nodes: used })
}

/// Assemble through the polynomial expansion of the kernel: each entry is a
/// combination of the moments `∫ u^m (f(x_j + r u) - x_i)^k du`, integrated
/// exactly by a Gauss–Legendre rule of sufficient degree.
///
/// Only polynomial maps make the moments polynomial, so other maps are refused.
pub fn assemble_transfer_matrix_series(
    sys: &NoisySystem,
    partition: Partition,
    degree: usize,
    delta_entry: f64,
    bits: u32,
) -> Result<TransferMatrix, TransferError> {
    let coeffs = sys.map.polynomial_coeffs().ok_or_else(|| {
        TransferError::Invalid("the series assembly needs a polynomial map".into())
    })?;
    let map_degree = coeffs.len().saturating_sub(1).max(1);
    let eb = entry_bits(delta_entry)?;
    let ctx = ExpansionContext::new(&sys.kernel, eb + 4, degree, EXPANSION_CAP)?;
    let a = partition.len();
    let d1 = degree + 1;
    let n = a * d1;
    let mut raw = vec![PrecisionReal::zero(bits); n * n];
    let mut used = Vec::with_capacity(a);
    for i in 0..a {
        let w0 = ctx.bits();
        let xi = partition.center(i, w0);
        let expansions = (0..d1).map(|l| ctx.expansion(&xi, l)).collect::<Result<Vec<_>, _>>()?;
        let k_max = expansions.iter().map(|e| e.coeffs.len()).max().unwrap_or(1);
        let mass = expansions.iter().map(|e| e.mass_log2).fold(0f64, f64::max);
        let wq = (eb as f64 + mass.max(0.0) + 32.0).ceil() as u32;
        let nodes = (degree + (k_max - 1) * map_degree + 2).div_ceil(2);
        let rule = gauss_legendre(nodes, wq);
        let r = partition.radius(wq);
        let polys: Vec<Vec<PrecisionReal>> = expansions
            .iter()
            .map(|e| e.coeffs.iter().map(|c| c.with_bits(wq)).collect())
            .collect();
        for j in 0..a {
            let xj = partition.center(j, wq);
            let mut acc = vec![PrecisionReal::zero(wq); d1 * d1];
            for (u, wt) in rule.nodes.iter().zip(&rule.weights) {
                let y = &xj + &r.mul_to(u, wq);
                let wv = &sys.map.eval(&y, wq) - &xi.with_bits(wq);
                let mut um = wt.clone();
                let vals: Vec<PrecisionReal> = polys.iter().map(|c| poly_eval(c, &wv, wq)).collect();
                for m in 0..d1 {
                    for (l, v) in vals.iter().enumerate() {
                        acc[l * d1 + m] = &acc[l * d1 + m] + &v.mul_to(&um, wq);
                    }
                    um = um.mul_to(u, wq);
                }
            }
            let mut rl = r.clone();
            for l in 0..d1 {
                for m in 0..d1 {
                    raw[(i * d1 + l) * n + j * d1 + m] = acc[l * d1 + m].mul_to(&rl, wq).with_bits(bits);
                }
                rl = rl.mul_to(&r, wq);
            }
        }
        used.push(nodes);
    }
    Ok(TransferMatrix { partition, degree, bits, raw, entry_tol: delta_entry, nodes: used })
}
