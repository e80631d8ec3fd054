//! Polynomial expansions of the kernel and its derivatives in the landing
//! point, built from a Chebyshev model of `C_ε` and a truncated exp series.

use std::f64::consts::{LOG2_E, PI};

use num_bigint::BigInt;

use crate::numerics::{cos, pi, PrecisionReal};
use crate::taylor::{poly_eval, poly_mul, poly_shift};

use super::{normalization, GaussianKernel, KernelError};

const CHEB_DEGREES: [usize; 13] = [16, 24, 32, 48, 64, 96, 128, 192, 256, 384, 512, 768, 1024];

/// A polynomial approximation of `v ↦ C_ε(v)` on [0, 1].
#[derive(Debug, Clone)]
pub struct NormalizationPoly {
    degree: usize,
    cheb: Vec<PrecisionReal>,
    monomial: Vec<PrecisionReal>,
    tol_bits: u32,
}

/// Integer coefficients of `T_j(2v - 1)` for `j = 0..=d`.
fn shifted_chebyshev(d: usize) -> Vec<Vec<BigInt>> {
    let mut out: Vec<Vec<BigInt>> = vec![vec![BigInt::from(1)], vec![BigInt::from(-1), BigInt::from(2)]];
    for j in 1..d {
        // T_{j+1} = 2(2v - 1) T_j - T_{j-1}
        let (tj, tm) = (&out[j], &out[j - 1]);
        let mut next = vec![BigInt::from(0); j + 2];
        for (k, c) in tj.iter().enumerate() {
            next[k + 1] += c * 4;
            next[k] -= c * 2;
        }
        for (k, c) in tm.iter().enumerate() {
            next[k] -= c;
        }
        out.push(next);
    }
    out.truncate(d + 1);
    out
}

impl NormalizationPoly {
    /// Chebyshev interpolant of `C_ε` with sampled error below `2^-tol_bits`.
    pub fn new(kernel: &GaussianKernel, tol_bits: u32) -> Result<Self, KernelError> {
        let eps = kernel.eps();
        for &d in &CHEB_DEGREES {
            let wc = tol_bits + 24 + (usize::BITS - d.leading_zeros());
            let pi_w = pi(wc + 8);
            let m = (d + 1) as i64;
            let xs: Vec<PrecisionReal> = (0..=d as i64)
                .map(|k| cos(&pi_w.mul_i64(2 * k + 1).div_i64(2 * m), wc + 8).with_bits(wc))
                .collect();
            let half = |x: &PrecisionReal| (&PrecisionReal::one(wc) + x).shl(-1);
            let fs: Vec<PrecisionReal> = xs.iter().map(|x| normalization(&half(x), eps, wc)).collect();
            let mut cheb = vec![PrecisionReal::zero(wc); d + 1];
            for (x, f) in xs.iter().zip(&fs) {
                // T_j(x_k) by the three-term recurrence
                let mut t0 = PrecisionReal::one(wc);
                let mut t1 = x.clone();
                cheb[0] = &cheb[0] + f;
                for c in cheb.iter_mut().skip(1) {
                    *c = &*c + &f.mul_to(&t1, wc);
                    let t2 = &x.mul_to(&t1, wc).shl(1) - &t0;
                    t0 = t1;
                    t1 = t2;
                }
            }
            for (j, c) in cheb.iter_mut().enumerate() {
                *c = c.mul_i64(if j == 0 { 1 } else { 2 }).div_i64(m);
            }
            let tail = &cheb[d].abs() + &cheb[d - 1].abs();
            if tail > PrecisionReal::pow2(-(tol_bits as i64) - 2, wc) {
                continue;
            }
            let mut poly = NormalizationPoly { degree: d, cheb, monomial: Vec::new(), tol_bits };
            let tol = PrecisionReal::pow2(-(tol_bits as i64) - 1, wc);
            let samples = 2 * d as i64;
            let ok = (0..samples).all(|i| {
                let v = PrecisionReal::from_int(2 * i + 1, wc).div_i64(2 * samples);
                (&poly.eval(&v) - &normalization(&v, eps, wc)).abs() <= tol
            });
            if !ok {
                continue;
            }
            // exact integer combinations, so evaluation matches the Chebyshev form
            let ts = shifted_chebyshev(d);
            let mut mono = vec![PrecisionReal::zero(wc); d + 1];
            for (c, t) in poly.cheb.iter().zip(&ts) {
                for (k, tk) in t.iter().enumerate() {
                    mono[k] = &mono[k] + &c.mul_int(tk);
                }
            }
            poly.monomial = mono;
            return Ok(poly);
        }
        Err(KernelError::ExpansionCap {
            needed: CHEB_DEGREES[CHEB_DEGREES.len() - 1] + 1,
            cap: CHEB_DEGREES[CHEB_DEGREES.len() - 1],
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn tol_bits(&self) -> u32 {
        self.tol_bits
    }

    /// Clenshaw evaluation at `v ∈ [0, 1]`.
    pub fn eval(&self, v: &PrecisionReal) -> PrecisionReal {
        let w = self.cheb[0].bits();
        let x = &v.with_bits(w).shl(1) - &PrecisionReal::one(w);
        let mut b1 = PrecisionReal::zero(w);
        let mut b2 = PrecisionReal::zero(w);
        for c in self.cheb.iter().skip(1).rev() {
            let b0 = &(&x.mul_to(&b1, w).shl(1) - &b2) + c;
            b2 = b1;
            b1 = b0;
        }
        &(&x.mul_to(&b1, w) - &b2) + &self.cheb[0]
    }

    /// Ascending coefficients in `v`.
    pub fn monomial(&self) -> &[PrecisionReal] {
        &self.monomial
    }

    /// `log2` of a bound on `Σ |a_k(x)|` for the expansion about any `x ∈ [0, 1]`.
    fn shifted_mass_log2(&self) -> f64 {
        let s: f64 = self
            .monomial
            .iter()
            .enumerate()
            .map(|(k, c)| c.to_f64().abs() * 2f64.powi(k as i32))
            .sum();
        s.log2().max(0.0)
    }
}

/// Coefficients of `Q(w) = ∂_x^l K(x_i + w → x)|_{x = x_i} / l!` in powers of `w`.
///
/// With `v = x_i + w` the landing point of the deterministic step, `Q(w)` is
/// `C_ε(v) He_l(w/ε) φ_ε(w) / (ε^l l!)`, and it agrees with the true
/// derivative to `error_bound` for all `v ∈ [0, 1]`.
#[derive(Debug, Clone)]
pub struct KernelExpansion {
    pub center: PrecisionReal,
    pub order: usize,
    pub coeffs: Vec<PrecisionReal>,
    pub error_bound: f64,
    /// `log2 Σ |coeffs|`: cancellation the consumer must budget for.
    pub mass_log2: f64,
}

impl KernelExpansion {
    pub fn eval(&self, w: &PrecisionReal) -> PrecisionReal {
        let bits = self.coeffs.first().map(|c| c.bits()).unwrap_or(64);
        poly_eval(&self.coeffs, w, bits)
    }
}

/// Shared pieces for expanding the kernel about many centers.
#[derive(Debug, Clone)]
pub struct ExpansionContext {
    kernel: GaussianKernel,
    cpoly: NormalizationPoly,
    /// Integer coefficients of `He_l` for `l ≤ l_max`.
    hermite: Vec<Vec<BigInt>>,
    /// `φ_ε` truncated: `Σ_j (-1/(2ε²))^j / j! w^{2j}` divided by `ε√(2π)`.
    gauss: Vec<PrecisionReal>,
    exp_terms: usize,
    bits: u32,
    delta_bits: u32,
}

fn log2_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).log2()).sum()
}

fn hermite_table(l_max: usize) -> Vec<Vec<BigInt>> {
    let mut out = vec![vec![BigInt::from(1)], vec![BigInt::from(0), BigInt::from(1)]];
    for n in 1..l_max {
        // He_{n+1} = z He_n - n He_{n-1}
        let mut next = vec![BigInt::from(0); n + 2];
        for (k, c) in out[n].iter().enumerate() {
            next[k + 1] += c;
        }
        for (k, c) in out[n - 1].iter().enumerate() {
            next[k] -= c * n;
        }
        out.push(next);
    }
    out.truncate(l_max + 1);
    out
}

impl ExpansionContext {
    /// Prepare expansions of orders `0..=l_max` accurate to `2^-delta_bits`,
    /// refusing if the polynomial degree would exceed `k_max`.
    pub fn new(
        kernel: &GaussianKernel,
        delta_bits: u32,
        l_max: usize,
        k_max: usize,
    ) -> Result<Self, KernelError> {
        let e = kernel.eps_f64();
        let s = 1.0 / (2.0 * e * e);
        let norm_log2 = -(e * (2.0 * PI).sqrt()).log2();
        let hermite = hermite_table(l_max);
        // sup over |w| <= 1 of |He_l(w/ε)| / (ε^l l!), bounded by the coefficient sum
        let herm_log2 = |l: usize| -> f64 {
            let s: f64 = hermite[l]
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let c: f64 = c.to_string().parse().unwrap_or(f64::INFINITY);
                    (c.abs().log2() - k as f64 * e.log2()).exp2()
                })
                .sum();
            s.log2() - l as f64 * e.log2() - log2_factorial(l)
        };
        let herm_max = (0..=l_max).map(herm_log2).fold(f64::MIN, f64::max);
        // Cramér: |He_l(z)| e^{-z²/4} <= 1.0866 sqrt(l!), so the exact product is tame
        let exact_max = (0..=l_max)
            .map(|l| 1.0866f64.log2() - l as f64 * e.log2() - 0.5 * log2_factorial(l))
            .fold(f64::MIN, f64::max);
        if !herm_max.is_finite() {
            return Err(KernelError::Domain(format!("eps = {e} too small to expand")));
        }
        let target = -(delta_bits as f64) - 2.0;
        // exp-series remainder S^{J+1}/(J+1)!, once alternating terms decrease
        let mut j = (s.ceil() as usize).max(1);
        loop {
            let rem = (j + 1) as f64 * s.log2() - log2_factorial(j + 1);
            if rem + 1.0 + norm_log2 + herm_max <= target {
                break;
            }
            j += 1;
            if 2 * j > k_max {
                return Err(KernelError::ExpansionCap { needed: 2 * j, cap: k_max });
            }
        }
        let tol_bits = (delta_bits as f64 + 2.0 + norm_log2 + exact_max.max(0.0) + 1.0).ceil() as u32;
        let cpoly = NormalizationPoly::new(kernel, tol_bits)?;
        let needed = cpoly.degree() + l_max + 2 * j;
        if needed > k_max {
            return Err(KernelError::ExpansionCap { needed, cap: k_max });
        }
        let gauss_mass = s * LOG2_E;
        let bits = (delta_bits as f64
            + 32.0
            + gauss_mass
            + herm_max.max(0.0)
            + cpoly.shifted_mass_log2()
            + norm_log2.max(0.0)
            + (needed as f64).log2())
        .ceil() as u32;
        let eps = kernel.eps().with_bits(bits);
        let two_eps2 = eps.square().shl(1);
        let mut g = vec![PrecisionReal::zero(bits); 2 * j + 1];
        let norm = PrecisionReal::one(bits)
            .div_to(&eps.mul_to(&pi(bits).shl(1).sqrt().expect("pi > 0"), bits), bits)
            .expect("eps > 0");
        let mut term = norm;
        for i in 0..=j {
            g[2 * i] = if i % 2 == 0 { term.clone() } else { -&term };
            term = term.div_to(&two_eps2, bits).expect("eps > 0").div_i64(i as i64 + 1);
        }
        Ok(ExpansionContext {
            kernel: kernel.clone(),
            cpoly,
            hermite,
            gauss: g,
            exp_terms: j + 1,
            bits,
            delta_bits,
        })
    }

    pub fn exp_terms(&self) -> usize {
        self.exp_terms
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn normalization_poly(&self) -> &NormalizationPoly {
        &self.cpoly
    }

    pub fn l_max(&self) -> usize {
        self.hermite.len() - 1
    }

    /// Expansion of order `l` about `x_i`.
    pub fn expansion(&self, x_i: &PrecisionReal, l: usize) -> Result<KernelExpansion, KernelError> {
        if l > self.l_max() {
            return Err(KernelError::Domain(format!("order {l} above the prepared {}", self.l_max())));
        }
        let w = self.bits;
        let cs = poly_shift(self.cpoly.monomial(), &x_i.with_bits(w), w);
        let inv_eps = PrecisionReal::one(w).div_to(&self.kernel.eps().with_bits(w), w).expect("eps > 0");
        let mut scale = PrecisionReal::one(w);
        for k in 1..=l {
            scale = scale.mul_to(&inv_eps, w).div_i64(k as i64);
        }
        let mut h = Vec::with_capacity(l + 1);
        for c in &self.hermite[l] {
            h.push(scale.mul_int(c));
            scale = scale.mul_to(&inv_eps, w);
        }
        let q = poly_mul(&poly_mul(&cs, &h, w), &self.gauss, w);
        let mass: f64 = q.iter().map(|c| c.to_f64().abs()).sum();
        Ok(KernelExpansion {
            center: x_i.clone(),
            order: l,
            coeffs: q,
            error_bound: 2f64.powi(-(self.delta_bits as i32)),
            mass_log2: mass.log2(),
        })
    }
}

/// One-shot expansion of order `l` about `x_i` to accuracy `delta`.
pub fn kernel_poly_expansion(
    x_i: &PrecisionReal,
    l: usize,
    kernel: &GaussianKernel,
    delta: f64,
    k_max: usize,
) -> Result<KernelExpansion, KernelError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(KernelError::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let delta_bits = (-delta.log2()).ceil() as u32;
    ExpansionContext::new(kernel, delta_bits, l, k_max)?.expansion(x_i, l)
}
