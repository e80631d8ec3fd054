//! The truncated Gaussian noise kernel on [0, 1].
//!
//! `kernel_eval(y, x)` is `C(x) φ_ε(y - x)` with `C(x)` chosen so the kernel
//! integrates to one in `y`. A noisy step from a source point `s` lands at
//! `u` with density `kernel_eval(u, f(s))`, which is what [`NoisySystem`]
//! exposes as its transition density.

mod erf;
mod expansion;
mod quadrature;

use std::f64::consts::{LOG2_E, PI, SQRT_2};

use thiserror::Error;

use crate::numerics::{exp_real, log_real, pi, NumericsError, PrecisionReal, GUARD_BITS};
use crate::taylor::{AnalyticMapSpec, PiecewiseTaylorDensity, TaylorError};

pub use erf::{erf, erfc};
pub use expansion::{kernel_poly_expansion, ExpansionContext, KernelExpansion, NormalizationPoly};
pub use quadrature::{gauss_kronrod, gauss_legendre, GaussLegendre};

/// Default cap on the degree of a kernel expansion.
pub const EXPANSION_CAP: usize = 4096;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum KernelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("kernel expansion needs {needed} terms, above the cap {cap}; increase the cap or eps")]
    ExpansionCap { needed: usize, cap: usize },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Taylor(#[from] TaylorError),
}

/// Gaussian noise of standard deviation `eps`, truncated to [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel {
    eps: PrecisionReal,
    bits: u32,
}

impl GaussianKernel {
    pub fn new(eps: PrecisionReal, bits: u32) -> Result<Self, KernelError> {
        if eps.signum() <= 0 {
            return Err(KernelError::Domain("eps must be positive".into()));
        }
        Ok(GaussianKernel { eps, bits })
    }

    pub fn from_f64(eps: f64, bits: u32) -> Result<Self, KernelError> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(KernelError::Domain(format!("eps must be positive, got {eps}")));
        }
        Self::new(PrecisionReal::from_f64(eps, bits.max(64)), bits)
    }

    pub fn eps(&self) -> &PrecisionReal {
        &self.eps
    }

    pub fn eps_f64(&self) -> f64 {
        self.eps.to_f64()
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn normalization(&self, x: &PrecisionReal) -> PrecisionReal {
        normalization(x, &self.eps, self.bits)
    }

    pub fn eval(&self, y: &PrecisionReal, x: &PrecisionReal) -> PrecisionReal {
        kernel_eval(y, x, &self.eps, self.bits)
    }

    pub fn eval_f64(&self, y: f64, x: f64) -> f64 {
        kernel_eval_f64(y, x, self.eps_f64())
    }
}

/// `C_ε(x)`: the reciprocal of the Gaussian mass that falls in [0, 1].
pub fn normalization(x: &PrecisionReal, eps: &PrecisionReal, p: u32) -> PrecisionReal {
    // mass = (erf((1-x)/(ε√2)) + erf(x/(ε√2))) / 2 >= 1/2, so C <= 2
    let w = p + 8;
    let s = eps.with_bits(w + 8).mul_to(&PrecisionReal::from_int(2, w + 8).sqrt().expect("2 > 0"), w + 8);
    let x = x.with_bits(w + 8);
    let a = (&PrecisionReal::one(w + 8) - &x).div_to(&s, w + 8).expect("eps > 0");
    let b = x.div_to(&s, w + 8).expect("eps > 0");
    let mass = (&erf(&a, w) + &erf(&b, w)).shl(-1);
    PrecisionReal::one(w).div_to(&mass, p).expect("mass >= 1/2")
}

/// `C_ε(x) φ_ε(y - x)` within `2^-p`.
pub fn kernel_eval(y: &PrecisionReal, x: &PrecisionReal, eps: &PrecisionReal, p: u32) -> PrecisionReal {
    let w = p + GUARD_BITS;
    let c = normalization(x, eps, w);
    c.mul_to(&gaussian(&(y - x), eps, w), w).with_bits(p)
}

/// `φ_ε(d) = exp(-d²/2ε²) / (ε√(2π))` within `2^-p`.
pub(crate) fn gaussian(d: &PrecisionReal, eps: &PrecisionReal, p: u32) -> PrecisionReal {
    let w = p + 16 + eps.recip().map(|r| r.to_f64().log2().max(0.0) as u32).unwrap_or(0);
    let e = eps.with_bits(w);
    let z = d.with_bits(w).div_to(&e, w).expect("eps > 0");
    let arg = -z.square().shl(-1);
    // exp underflows the target long before the exponent gets large
    if arg.to_f64() * LOG2_E < -((w + 8) as f64) {
        return PrecisionReal::zero(p);
    }
    let g = exp_real(&arg, w).expect("argument bounded");
    let norm = e.mul_to(&pi(w).shl(1).sqrt().expect("pi > 0"), w);
    g.div_to(&norm, p).expect("eps > 0")
}

pub fn normalization_f64(x: f64, eps: f64) -> f64 {
    let s = eps * SQRT_2;
    2.0 / (libm::erf((1.0 - x) / s) + libm::erf(x / s))
}

pub fn gaussian_f64(d: f64, eps: f64) -> f64 {
    (-0.5 * (d / eps).powi(2)).exp() / (eps * (2.0 * PI).sqrt())
}

pub fn kernel_eval_f64(y: f64, x: f64, eps: f64) -> f64 {
    normalization_f64(x, eps) * gaussian_f64(y - x, eps)
}

/// `-ln(ε √(2πe))`, the information carried across one noisy step.
pub fn memory_bound(eps: &PrecisionReal, p: u32) -> Result<PrecisionReal, KernelError> {
    if eps.signum() <= 0 {
        return Err(KernelError::Domain("eps must be positive".into()));
    }
    let w = p + GUARD_BITS;
    let two_pi_e = pi(w).shl(1).mul_to(&exp_real(&PrecisionReal::one(w), w)?, w);
    let v = -(&log_real(&eps.with_bits(w), w)? + &log_real(&two_pi_e, w)?.shl(-1));
    // the boundary value itself rounds to within a few ulps of zero
    if v < -PrecisionReal::pow2(-(p as i64) + 2, w) {
        return Err(KernelError::Domain(format!(
            "eps = {} exceeds 1/sqrt(2 pi e); the bound would be negative",
            eps.to_decimal_string()
        )));
    }
    Ok(v.with_bits(p))
}

/// A map on [0, 1] with additive truncated Gaussian noise.
#[derive(Debug, Clone)]
pub struct NoisySystem {
    pub map: AnalyticMapSpec,
    pub kernel: GaussianKernel,
}

impl NoisySystem {
    pub fn new(map: AnalyticMapSpec, kernel: GaussianKernel) -> Result<Self, KernelError> {
        map.check_range()?;
        Ok(NoisySystem { map, kernel })
    }

    /// Density of landing at `x` after one step from `y`.
    pub fn transition(&self, y: &PrecisionReal, x: &PrecisionReal) -> PrecisionReal {
        let fy = self.map.eval(y, self.kernel.bits + 8);
        self.kernel.eval(x, &fy)
    }

    pub fn transition_f64(&self, y: f64, x: f64) -> f64 {
        kernel_eval_f64(x, self.map.eval_f64(y), self.kernel.eps_f64())
    }
}

/// Quadrature evaluation of the pushforward `ρ(x) = ∫ μ(y) K(f(y) → x) dy` at
/// `points` equally spaced `x` in [0, 1] (endpoints included).
pub fn pushforward_density(
    mu: &PiecewiseTaylorDensity,
    sys: &NoisySystem,
    points: usize,
) -> Result<Vec<(f64, f64)>, KernelError> {
    let points = points.max(2);
    let eps = sys.kernel.eps_f64();
    // f(y) is shared by every grid point
    let pieces: Vec<(f64, f64, usize)> = mu
        .pieces
        .iter()
        .enumerate()
        .map(|(i, p)| (p.lo.to_f64(), p.hi.to_f64(), i))
        .collect();
    (0..points)
        .map(|k| {
            let x = k as f64 / (points - 1) as f64;
            let mut total = 0.0;
            for &(lo, hi, i) in &pieces {
                let piece = &mu.pieces[i];
                let g = |y: f64| piece.eval_f64(y) * kernel_eval_f64(x, sys.map.eval_f64(y), eps);
                total += gauss_kronrod(&g, lo, hi, 1e-12 / pieces.len() as f64)
                    .ok_or_else(|| KernelError::Quadrature(format!("pushforward at x = {x}")))?;
            }
            Ok((x, total))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taylor::ratio;

    fn pr(v: f64) -> PrecisionReal {
        PrecisionReal::from_f64(v, 96)
    }

    #[test]
    fn interior_and_edge_normalization() {
        let eps = pr(1e-3);
        assert!((normalization(&pr(0.5), &eps, 64).to_f64() - 1.0).abs() < 1e-6);
        assert!((normalization(&PrecisionReal::zero(64), &eps, 64).to_f64() - 2.0).abs() < 1e-4);
    }

    #[test]
    fn normalization_against_quadrature() {
        let eps = 0.2;
        let c = normalization(&pr(0.3), &pr(eps), 80).to_f64();
        let mass = gauss_kronrod(&|y: f64| gaussian_f64(y - 0.3, eps), 0.0, 1.0, 1e-14).unwrap();
        assert!((c - 1.0 / mass).abs() < 1e-10);
    }

    #[test]
    fn peak_and_symmetry() {
        let k = GaussianKernel::from_f64(0.1, 80).unwrap();
        let x = pr(0.5);
        let peak = k.eval(&x, &x).to_f64();
        let c = k.normalization(&x).to_f64();
        assert!((peak - c / (0.1 * (2.0 * PI).sqrt())).abs() < 1e-14);
        let x = pr(0.4);
        let h = pr(0.07);
        let a = k.eval(&(&x + &h), &x);
        let b = k.eval(&(&x - &h), &x);
        assert!((&a - &b).abs() <= PrecisionReal::pow2(-78, 80));
    }

    #[test]
    fn memory_bound_values() {
        let p = 96;
        let w = p + 32;
        let two_pi_e = pi(w).shl(1).mul_to(&exp_real(&PrecisionReal::one(w), w).unwrap(), w);
        let eps0 = PrecisionReal::one(w).div_to(&two_pi_e.sqrt().unwrap(), w).unwrap();
        let m0 = memory_bound(&eps0, p).unwrap();
        assert!(m0.abs() <= PrecisionReal::pow2(-(p as i64) + 2, p));
        let e_inv = exp_real(&PrecisionReal::from_int(-1, w), w).unwrap();
        let m1 = memory_bound(&e_inv.mul_to(&eps0, w), p).unwrap();
        assert!((&m1 - &PrecisionReal::one(p)).abs() <= PrecisionReal::pow2(-(p as i64) + 3, p));
        assert!(memory_bound(&pr(0.5), p).is_err());
        assert!(memory_bound(&PrecisionReal::zero(p), p).is_err());
    }

    #[test]
    fn constant_map_pushforward_is_the_kernel() {
        let sys = NoisySystem::new(
            AnalyticMapSpec::constant(ratio(1, 2)),
            GaussianKernel::from_f64(0.1, 64).unwrap(),
        )
        .unwrap();
        let mu = PiecewiseTaylorDensity::uniform_partition(
            vec![vec![PrecisionReal::one(64)]; 4],
            64,
        )
        .unwrap();
        let rho = pushforward_density(&mu, &sys, 33).unwrap();
        for (x, v) in rho {
            assert!((v - kernel_eval_f64(x, 0.5, 0.1)).abs() < 1e-8);
        }
    }
}
