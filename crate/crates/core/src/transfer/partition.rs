use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed};

use crate::kernel::NoisySystem;
use crate::numerics::{exp_real, PrecisionReal};
use crate::taylor::DEGREE_CAP;

use super::TransferError;

/// Default cap on the number of partition intervals.
pub const PARTITION_CAP: usize = 4096;

/// `log2` of the largest horizon we store; beyond it `t` is clamped.
pub const HORIZON_MAX_LOG2: u32 = 1024;

/// Uniform tiling of [0, 1] into `A` intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Partition {
    a: usize,
}

impl Partition {
    pub fn uniform(a: usize) -> Result<Self, TransferError> {
        if a == 0 {
            return Err(TransferError::Invalid("a partition needs at least one interval".into()));
        }
        Ok(Partition { a })
    }

    pub fn len(&self) -> usize {
        self.a
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Half-width `1/(2A)`.
    pub fn radius(&self, bits: u32) -> PrecisionReal {
        PrecisionReal::one(bits).div_i64(2 * self.a as i64)
    }

    pub fn center(&self, i: usize, bits: u32) -> PrecisionReal {
        PrecisionReal::from_int(2 * i as i64 + 1, bits).div_i64(2 * self.a as i64)
    }

    pub fn lo(&self, i: usize, bits: u32) -> PrecisionReal {
        PrecisionReal::from_int(i as i64, bits).div_i64(self.a as i64)
    }

    pub fn hi(&self, i: usize, bits: u32) -> PrecisionReal {
        self.lo(i + 1, bits)
    }

    pub fn center_f64(&self, i: usize) -> f64 {
        (2 * i + 1) as f64 / (2 * self.a) as f64
    }

    /// Index of the interval containing `x`; interior boundaries go left.
    pub fn index_of(&self, x: f64) -> usize {
        let k = (x * self.a as f64).ceil() as usize;
        k.saturating_sub(1).min(self.a - 1)
    }
}

/// Intervals of diameter at most `min(ε, 1/(2η))`.
pub fn build_partition(sys: &NoisySystem, cap: usize) -> Result<Partition, TransferError> {
    let eps = sys.kernel.eps_f64();
    let eta = sys.map.eta();
    let diam = eps.min(1.0 / (2.0 * eta));
    let a = (1.0 / diam - 1e-9).ceil().max(1.0);
    if !a.is_finite() || a > cap as f64 {
        return Err(TransferError::PartitionCap {
            needed: if a.is_finite() { a as usize } else { usize::MAX },
            cap,
        });
    }
    Partition::uniform(a as usize)
}

/// Which route turns the transfer matrix into an invariant density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// `P_N^t ρ₀` through the spectral matrix power.
    #[default]
    Power,
    /// The fixed point of `P_N` by a bordered linear solve.
    Eigen,
}

/// Horizon, truncation degree and the constants that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveParams {
    pub delta: f64,
    pub t: BigUint,
    pub n: usize,
    pub c_t: f64,
    pub c_n: f64,
    pub method: Method,
    /// Set when `t` hit `2^HORIZON_MAX_LOG2`.
    pub t_clamped: bool,
}

/// `t = ⌈c_t ln(1/δ) e^{1/ε²}⌉` and `N = ⌈c_N ln(1/δ) / ε²⌉` (capped).
pub fn horizon_and_truncation(delta: f64, eps: f64, c_t: f64, c_n: f64) -> SolveParams {
    let ln_inv = -delta.ln();
    let inv_eps2 = 1.0 / (eps * eps);
    // 1e-9 of slack keeps exact integers from rounding up through f64 noise
    let n = (c_n * ln_inv * inv_eps2 - 1e-9).ceil().max(0.0);
    let n = if n.is_finite() { (n as usize).min(DEGREE_CAP) } else { DEGREE_CAP };
    let log2_t = (c_t * ln_inv).log2() + inv_eps2 * std::f64::consts::LOG2_E;
    let (t, t_clamped) = if !(log2_t < HORIZON_MAX_LOG2 as f64) {
        (BigUint::one() << HORIZON_MAX_LOG2 as usize, true)
    } else {
        let bits = (log2_t.max(0.0) as u32) + 64;
        let x = PrecisionReal::from_f64(inv_eps2, bits);
        let g = exp_real(&x, bits).expect("exponent below the clamp");
        let v = g.mul_to(&PrecisionReal::from_f64(c_t * ln_inv, bits), bits);
        let slack = PrecisionReal::from_f64(1e-9, bits);
        // ceil(v - slack)
        let fl = (&v - &slack).floor();
        let mut t: BigInt = fl.clone();
        if PrecisionReal::from_int(fl, bits) < (&v - &slack) {
            t += 1;
        }
        let t = if t.is_positive() { t.to_biguint().expect("positive") } else { BigUint::one() };
        (t, false)
    };
    SolveParams { delta, t, n, c_t, c_n, method: Method::Power, t_clamped }
}
