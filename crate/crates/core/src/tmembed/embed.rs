use num_bigint::BigInt;
use num_rational::BigRational;

use crate::kernel::erfc;
use crate::numerics::PrecisionReal;
use crate::taylor::{AnalyticMapSpec, SigmoidTerm};

use super::machine::{enumerate_configs, ConfigEncoding, TuringMachine};
use super::TmError;

/// Smallest noise level we are prepared to resolve.
const EPS_FLOOR_LOG2: i32 = -40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    /// Constant on each cell `X_k`.
    Piecewise,
    /// Sum of logistic steps of steepness `C = ⌈ln((1-β)/β)/α⌉`.
    Sigmoid { alpha: f64, beta: f64, steepness: u64 },
}

/// A machine compiled into a self-map of [0, 1] on `N = 2S²` cells.
#[derive(Debug, Clone)]
pub struct EmbeddedSystem {
    /// Configuration count `S`.
    pub s_count: usize,
    /// Cell count `N = 2S²`.
    pub n: usize,
    /// Index of the initial configuration.
    pub s_index: usize,
    pub succ: Vec<usize>,
    pub variant: Variant,
    pub eps: f64,
    pub encoding: ConfigEncoding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantKind {
    Piecewise,
    Sigmoid,
}

#[derive(Debug, Clone)]
pub struct EmbedOptions {
    pub variant: VariantKind,
    /// Noise exponent; see [`choose_epsilon`]. `None` uses
    /// [`default_c_exp`].
    pub c_exp: Option<f64>,
    /// Overrides the default `α = β = min(10^-3, 1/(8N))`.
    pub alpha_beta: Option<f64>,
    pub config_cap: usize,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        EmbedOptions {
            variant: VariantKind::Piecewise,
            c_exp: None,
            alpha_beta: None,
            config_cap: super::machine::CONFIG_CAP,
        }
    }
}

/// Successor of cell `k` in the embedded dynamics.
pub fn succ(k: usize, tm: &TuringMachine, enc: &ConfigEncoding) -> Result<usize, TmError> {
    let s = enc.size();
    let n = 2 * s * s;
    if k >= n {
        return Err(TmError::Index { k, n });
    }
    let home = enc.encode(tm.initial_config()) * s;
    if k >= s * s {
        return Ok(if k + 1 < n { k + 1 } else { home });
    }
    let (v, t) = (k / s, k % s);
    let cfg = enc.decode(v);
    Ok(if cfg.control == tm.accept {
        s * s
    } else if cfg.control == tm.reject || t == s - 1 {
        home
    } else {
        enc.encode(tm.step(cfg)) * s + t + 1
    })
}

/// Steepness `C = ⌈α^-1 ln((1 - β)/β)⌉`.
pub fn steepness(alpha: f64, beta: f64) -> Result<u64, TmError> {
    if !(alpha > 0.0 && alpha < 0.5 && beta > 0.0 && beta < 0.5) {
        return Err(TmError::Invalid(format!("alpha, beta must lie in (0, 1/2), got {alpha}, {beta}")));
    }
    Ok((((1.0 - beta) / beta).ln() / alpha).ceil() as u64)
}

/// The logistic step `F(x) = 1/(1 + e^{-Cx})` within `2^-p`.
pub fn sigmoid_step(x: &PrecisionReal, steepness: u64, p: u32) -> PrecisionReal {
    let w = p + 8;
    let z = x.with_bits(w).mul_int(&BigInt::from(steepness));
    crate::taylor::logistic(&z, p)
}

/// Noise level: for the piecewise variant the `ε` with
/// `erfc(1/(2Nε√2)) = N^-c_exp`, so a step leaves its cell core with
/// probability `N^-c_exp`; for the sigmoid variant `S^-c_exp`.
pub fn choose_epsilon(s_count: usize, kind: VariantKind, c_exp: f64) -> Result<f64, TmError> {
    if !(c_exp >= 2.0) {
        return Err(TmError::Invalid(format!("c_exp must be at least 2, got {c_exp}")));
    }
    let n = 2.0 * (s_count * s_count) as f64;
    let eps = match kind {
        VariantKind::Sigmoid => (s_count as f64).powf(-c_exp),
        VariantKind::Piecewise => {
            let bits = 64 + (c_exp * n.log2()).ceil() as u32;
            let target = PrecisionReal::from_f64(n.powf(-c_exp), bits);
            // erfc decreases: bisect on z in [0, 64]
            let (mut lo, mut hi) = (PrecisionReal::zero(bits), PrecisionReal::from_int(64, bits));
            for _ in 0..bits + 8 {
                let mid = (&lo + &hi).shl(-1);
                if erfc(&mid, bits) > target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let z = (&lo + &hi).shl(-1).to_f64();
            1.0 / (2.0 * n * z * std::f64::consts::SQRT_2)
        }
    };
    if eps.log2() < EPS_FLOOR_LOG2 as f64 {
        return Err(TmError::EpsilonFloor { eps, needed_bits: (-eps.log2()).ceil() as u32 + 64 });
    }
    Ok(eps)
}

/// 2 for the piecewise map. The sigmoid variant sets `ε = S^-c_exp` against
/// cells of width `1/(2S²)`, so it needs 4 to keep the noise well inside a cell.
pub fn default_c_exp(kind: VariantKind) -> f64 {
    match kind {
        VariantKind::Piecewise => 2.0,
        VariantKind::Sigmoid => 4.0,
    }
}

/// Compile `tm` into an embedded system.
pub fn embed(tm: &TuringMachine, opts: &EmbedOptions) -> Result<EmbeddedSystem, TmError> {
    let enc = enumerate_configs(tm, opts.config_cap)?;
    let s = enc.size();
    let n = 2 * s * s;
    let succ = (0..n).map(|k| succ(k, tm, &enc)).collect::<Result<Vec<_>, _>>()?;
    let variant = match opts.variant {
        VariantKind::Piecewise => Variant::Piecewise,
        VariantKind::Sigmoid => {
            let ab = opts.alpha_beta.unwrap_or_else(|| (1e-3f64).min(1.0 / (8.0 * n as f64)));
            Variant::Sigmoid { alpha: ab, beta: ab, steepness: steepness(ab, ab)? }
        }
    };
    Ok(EmbeddedSystem {
        s_count: s,
        n,
        s_index: enc.encode(tm.initial_config()),
        succ,
        variant,
        eps: choose_epsilon(s, opts.variant, opts.c_exp.unwrap_or(default_c_exp(opts.variant)))?,
        encoding: enc,
    })
}

impl EmbeddedSystem {
    /// Cell centre `c_k = (2k + 1)/(2N)`.
    pub fn center(&self, k: usize) -> BigRational {
        BigRational::new(BigInt::from(2 * k + 1), BigInt::from(2 * self.n))
    }

    pub fn center_f64(&self, k: usize) -> f64 {
        (2 * k + 1) as f64 / (2 * self.n) as f64
    }

    /// Cell index of the initial configuration's block, `s·S`.
    pub fn home(&self) -> usize {
        self.s_index * self.s_count
    }

    fn cell_of(&self, x: f64) -> usize {
        ((x * self.n as f64).floor().max(0.0) as usize).min(self.n - 1)
    }

    /// The step map `f(x) = c_succ(k)` on `X_k = [k/N, (k+1)/N)`.
    pub fn piecewise_eval(&self, x: &PrecisionReal, bits: u32) -> PrecisionReal {
        let k = (x.mul_i64(self.n as i64).floor().max(BigInt::from(0)))
            .try_into()
            .map(|k: usize| k.min(self.n - 1))
            .unwrap_or(self.n - 1);
        PrecisionReal::from_ratio(&self.center(self.succ[k]), bits)
    }

    pub fn piecewise_eval_f64(&self, x: f64) -> f64 {
        self.center_f64(self.succ[self.cell_of(x)])
    }

    /// `f(x) = c_succ(0) + Σ_{i=1}^{N-1} (c_succ(i) - c_succ(i-1)) F(x - i/N)`.
    /// Zero-weight steps are omitted; they do not change the map.
    pub fn analytic_map(&self) -> Result<AnalyticMapSpec, TmError> {
        let c = match self.variant {
            Variant::Sigmoid { steepness, .. } => steepness,
            Variant::Piecewise => {
                return Err(TmError::Invalid("the piecewise variant has no analytic map".into()))
            }
        };
        let terms = (1..self.n)
            .filter(|&i| self.succ[i] != self.succ[i - 1])
            .map(|i| SigmoidTerm {
                weight: self.center(self.succ[i]) - self.center(self.succ[i - 1]),
                shift: BigRational::new(BigInt::from(i), BigInt::from(self.n)),
                steepness: BigRational::from_integer(BigInt::from(c)),
            })
            .collect();
        Ok(AnalyticMapSpec::SigmoidSum { base: self.center(self.succ[0]), terms })
    }

    /// Cells visited from `k` until the first repeat.
    pub fn orbit(&self, k: usize) -> Vec<usize> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        let mut cur = k;
        while !seen[cur] {
            seen[cur] = true;
            out.push(cur);
            cur = self.succ[cur];
        }
        out
    }

    /// Whether every cell reaches `sS` within `N` applications of `succ`.
    pub fn returns_home(&self) -> bool {
        let home = self.home();
        (0..self.n).all(|k| {
            let mut cur = k;
            for _ in 0..=self.n {
                if cur == home {
                    return true;
                }
                cur = self.succ[cur];
            }
            false
        })
    }

    /// Whether the orbit of `sS` covers the whole upper block `S²..2S²`.
    pub fn orbit_covers_accept_block(&self) -> bool {
        let orbit = self.orbit(self.home());
        let s2 = self.s_count * self.s_count;
        (s2..self.n).all(|k| orbit.contains(&k))
    }
}
