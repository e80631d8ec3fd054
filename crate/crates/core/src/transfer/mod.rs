//! The truncated transfer operator on a piecewise-Taylor basis and the
//! invariant density it produces.
//!
//! A density is stored as coefficients `ρ_(i,l)` of `((x - x_i)/r)^l` on each
//! interval `a_i` of a uniform partition with half-width `r`. The transfer
//! matrix maps these coefficients to those of the noisy pushforward.

mod assemble;
mod linalg;
mod measure;
mod partition;
mod ulam;

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use thiserror::Error;

use crate::kernel::{gauss_legendre, KernelError, NoisySystem};
use crate::matpow::{matrix_power_with, MatpowError, PowerOptions};
use crate::numerics::{bit_len, PowerResult, PrecisionReal};
use crate::taylor::{PiecewiseTaylorDensity, TaylorError, TaylorPiece};

pub use assemble::{assemble_transfer_matrix, assemble_transfer_matrix_series, TransferMatrix};
pub use linalg::stationary_vector;
pub use measure::{cell_masses, distance, measure_weight, DistanceMode};
pub use partition::{
    build_partition, horizon_and_truncation, Method, Partition, SolveParams, HORIZON_MAX_LOG2,
    PARTITION_CAP,
};
pub use ulam::{interval_markov_matrix, ulam_invariant};

#[derive(Debug, Clone, Error)]
pub enum TransferError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("partition needs {needed} intervals, above the cap {cap}")]
    PartitionCap { needed: usize, cap: usize },
    #[error("quadrature for source interval {column} still moving by {change:e} at {nodes} nodes")]
    Quadrature { column: usize, nodes: usize, change: f64 },
    #[error("Taylor truncation not settled: raising the degree past {degree} still changes the density by {change:e}")]
    Truncation { degree: usize, change: f64 },
    #[error("singular linear system")]
    Singular,
    #[error("fixed-point residual {residual:e} above tolerance")]
    NoConvergence { residual: f64 },
    #[error("matrix power overflowed (log-norm {log_norm}); the truncated operator is not contracting")]
    Overflow { log_norm: f64 },
    #[error("density reaches {value:e} at x = {x}, below the negativity tolerance")]
    Negative { x: f64, value: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Matpow(#[from] MatpowError),
    #[error(transparent)]
    Taylor(#[from] TaylorError),
}

/// Starting density for the power method.
#[derive(Clone, Default)]
pub enum InitialDensity {
    #[default]
    Uniform,
    /// Any integrable function on [0, 1]; projected onto the basis and
    /// normalised to unit mass.
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for InitialDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialDensity::Uniform => f.write_str("Uniform"),
            InitialDensity::Function(_) => f.write_str("Function(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct InvariantOptions {
    pub method: Method,
    pub c_t: f64,
    pub c_n: f64,
    /// First Taylor degree tried; raised by 2 until the density settles.
    pub taylor_degree: usize,
    pub max_degree: usize,
    /// Output precision of the matrix power.
    pub precision_bits: u32,
    pub partition_cap: usize,
    pub initial: InitialDensity,
    /// Replaces the computed horizon.
    pub horizon: Option<BigUint>,
}

impl Default for InvariantOptions {
    fn default() -> Self {
        InvariantOptions {
            method: Method::Power,
            c_t: 4.0,
            c_n: 2.0,
            taylor_degree: 6,
            max_degree: 24,
            precision_bits: 64,
            partition_cap: PARTITION_CAP,
            initial: InitialDensity::Uniform,
            horizon: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveDiagnostics {
    pub a: usize,
    pub degree: usize,
    pub t: BigUint,
    pub t_clamped: bool,
    pub method: Method,
    /// Mass of the raw solution before renormalisation.
    pub mass_before: f64,
    /// Largest mass-conservation correction applied to an entry.
    pub mass_correction: f64,
    /// Change in the density when the degree was raised by 2.
    pub truncation_change: f64,
    /// `||P v - v||∞` for the final coefficient vector.
    pub residual: f64,
    /// Location and value of the smallest density sample.
    pub min_density: (f64, f64),
    pub entry_tol: f64,
    pub working_bits: u32,
}

#[derive(Debug, Clone)]
pub struct InvariantSolution {
    pub density: PiecewiseTaylorDensity,
    pub coeffs: Vec<PrecisionReal>,
    pub transfer: TransferMatrix,
    pub diagnostics: SolveDiagnostics,
}

/// Piecewise density from scaled coefficients.
pub fn coeffs_to_density(
    partition: Partition,
    degree: usize,
    v: &[PrecisionReal],
) -> Result<PiecewiseTaylorDensity, TransferError> {
    let a = partition.len();
    if v.len() != a * (degree + 1) {
        return Err(TransferError::Invalid("coefficient vector has the wrong length".into()));
    }
    let bits = v.iter().map(|c| c.bits()).max().unwrap_or(64);
    let inv_r = num_bigint::BigInt::from(2 * a);
    let pieces = (0..a)
        .map(|i| {
            let mut s = num_bigint::BigInt::from(1);
            let coeffs = (0..=degree)
                .map(|l| {
                    let c = v[i * (degree + 1) + l].with_bits(bits).mul_int(&s);
                    s *= &inv_r;
                    c
                })
                .collect();
            TaylorPiece {
                center: partition.center(i, bits),
                lo: partition.lo(i, bits),
                hi: partition.hi(i, bits),
                coeffs,
                tail_bound: PrecisionReal::zero(bits),
            }
        })
        .collect();
    Ok(PiecewiseTaylorDensity::new(pieces)?)
}

/// `ω · v`: the total mass of a scaled coefficient vector.
pub fn coeff_mass(partition: Partition, degree: usize, v: &[PrecisionReal]) -> PrecisionReal {
    let bits = v.iter().map(|c| c.bits()).max().unwrap_or(64);
    let omega = assemble::mass_weights(partition, degree, bits + 16);
    omega
        .iter()
        .zip(v)
        .fold(PrecisionReal::zero(bits + 16), |acc, (o, c)| &acc + &o.mul_to(c, bits + 16))
        .with_bits(bits)
}

/// Least-squares projection of `f` onto degree-`N` polynomials on each
/// interval, in scaled coefficients, normalised to unit mass.
pub fn project_density(
    partition: Partition,
    degree: usize,
    f: &dyn Fn(f64) -> f64,
    bits: u32,
) -> Result<Vec<PrecisionReal>, TransferError> {
    let rule = gauss_legendre(degree + 24, 64);
    let nodes: Vec<(f64, f64)> = rule.nodes.iter().zip(&rule.weights).map(|(u, w)| (u.to_f64(), w.to_f64())).collect();
    // monomial coefficients of the Legendre polynomials P_0..P_N
    let mut leg: Vec<Vec<f64>> = vec![vec![1.0], vec![0.0, 1.0]];
    for k in 1..degree {
        let mut next = vec![0.0; k + 2];
        for (i, c) in leg[k].iter().enumerate() {
            next[i + 1] += (2 * k + 1) as f64 * c / (k + 1) as f64;
        }
        for (i, c) in leg[k - 1].iter().enumerate() {
            next[i] -= k as f64 * c / (k + 1) as f64;
        }
        leg.push(next);
    }
    leg.truncate(degree + 1);
    let a = partition.len();
    let r = 0.5 / a as f64;
    let mut out = Vec::with_capacity(a * (degree + 1));
    for i in 0..a {
        let xi = partition.center_f64(i);
        let mut mono = vec![0.0f64; degree + 1];
        for (k, p) in leg.iter().enumerate() {
            let pk = |u: f64| p.iter().rev().fold(0.0, |acc, c| acc * u + c);
            let proj: f64 = nodes.iter().map(|&(u, w)| w * f(xi + r * u) * pk(u)).sum::<f64>() * (2 * k + 1) as f64 / 2.0;
            for (m, c) in p.iter().enumerate() {
                mono[m] += proj * c;
            }
        }
        out.extend(mono.into_iter().map(|c| PrecisionReal::from_f64(c, bits)));
    }
    let mass = coeff_mass(partition, degree, &out);
    if mass.signum() <= 0 {
        return Err(TransferError::Invalid("initial density has no positive mass".into()));
    }
    Ok(out.iter().map(|c| c.div_to(&mass, bits).expect("positive mass")).collect())
}

/// Pushforward of a coefficient vector through the mass-conserving matrix.
pub fn apply_transfer(p: &TransferMatrix, v: &[PrecisionReal]) -> Vec<PrecisionReal> {
    p.mass_conserving().0.mul_vec(v)
}

/// Fixed point of the mass-conserving transfer matrix, with unit mass.
pub fn stationary_eigenvector(p: &TransferMatrix) -> Result<Vec<PrecisionReal>, TransferError> {
    let (m, _) = p.mass_conserving();
    let omega = p.mass_weights(p.bits());
    Ok(stationary_vector(&m, &omega, 0, p.bits())?.0)
}

fn entry_tolerance(delta: f64, a: usize, degree: usize) -> f64 {
    delta / (16.0 * (a * (degree + 1)) as f64)
}

fn grid_min(d: &PiecewiseTaylorDensity, points: usize) -> (f64, f64) {
    (0..points)
        .map(|k| {
            let x = k as f64 / (points - 1) as f64;
            (x, d.eval_f64(x))
        })
        .fold((0.0, f64::INFINITY), |acc, s| if s.1 < acc.1 { s } else { acc })
}

/// Invariant density of `sys` to accuracy `delta`.
///
/// Picks the partition and horizon, raises the Taylor degree until the fixed
/// point stops moving by more than `delta / 2`, then applies `P_N^t` to the
/// initial density (or solves for the fixed point directly).
pub fn invariant_measure(
    sys: &NoisySystem,
    delta: f64,
    opts: &InvariantOptions,
) -> Result<InvariantSolution, TransferError> {
    let eps = sys.kernel.eps_f64();
    if !(delta > 0.0 && delta < eps) {
        return Err(TransferError::Invalid(format!("delta must lie in (0, eps = {eps}), got {delta}")));
    }
    let partition = build_partition(sys, opts.partition_cap)?;
    let params = horizon_and_truncation(delta, eps, opts.c_t, opts.c_n);
    let t = opts.horizon.clone().unwrap_or_else(|| params.t.clone());
    if params.t_clamped && opts.horizon.is_none() {
        log::warn!("horizon clamped to 2^{HORIZON_MAX_LOG2}");
    }
    let a = partition.len();
    let p = opts.precision_bits;
    let mut degree = params.n.min(opts.taylor_degree);
    // entries carry enough bits that the unit eigenvalue survives t squarings
    let storage = |deg: usize| {
        let n = (a * (deg + 1)) as u32;
        p + bit_len(&t) + (32 - n.leading_zeros()) + 16
    };
    let (transfer, change) = loop {
        let bits = storage(degree + 2);
        let big = assemble_transfer_matrix(sys, partition, degree + 2, entry_tolerance(delta, a, degree + 2), bits)?;
        let small = big.truncated(degree);
        let v_small = stationary_eigenvector(&small)?;
        let v_big = stationary_eigenvector(&big)?;
        let d_small = coeffs_to_density(partition, degree, &v_small)?;
        let d_big = coeffs_to_density(partition, degree + 2, &v_big)?;
        let change = distance(&d_small, &d_big, DistanceMode::LInf).to_f64();
        log::info!("degree {degree}: raising to {} moves the density by {change:e}", degree + 2);
        if change <= delta / 2.0 {
            break (small, change);
        }
        if degree + 2 > opts.max_degree {
            return Err(TransferError::Truncation { degree, change });
        }
        degree += 2;
    };
    let bits = transfer.bits();
    let (m, mass_correction) = transfer.mass_conserving();
    let omega = transfer.mass_weights(bits);
    let (coeffs, working_bits) = match opts.method {
        Method::Power => {
            let rho0 = match &opts.initial {
                InitialDensity::Uniform => {
                    let mut v = vec![PrecisionReal::zero(bits); transfer.dim()];
                    for i in 0..a {
                        v[transfer.index(i, 0)] = PrecisionReal::one(bits);
                    }
                    v
                }
                InitialDensity::Function(f) => project_density(partition, degree, f.as_ref(), bits)?,
            };
            let popts = PowerOptions { perturb: false, ..PowerOptions::default() };
            let bound = PrecisionReal::pow2(64, 64);
            let (res, report) = matrix_power_with(&m, &t, p, &bound, &popts)?;
            let mt = match res {
                PowerResult::Value(mt) => mt,
                PowerResult::Overflow(o) => {
                    return Err(TransferError::Overflow { log_norm: o.log_norm_estimate.to_f64() })
                }
            };
            (mt.mul_vec(&rho0), report.working_bits)
        }
        Method::Eigen => (stationary_vector(&m, &omega, 0, bits)?.0, bits + 64),
    };
    let mass = coeff_mass(partition, degree, &coeffs);
    if mass.signum() <= 0 {
        return Err(TransferError::Invalid("solution has no positive mass".into()));
    }
    log::info!("mass before renormalisation: {}", mass.to_f64());
    let coeffs: Vec<PrecisionReal> = coeffs.iter().map(|c| c.div_to(&mass, bits).expect("positive")).collect();
    let residual = m
        .mul_vec(&coeffs)
        .iter()
        .zip(&coeffs)
        .map(|(x, y)| (x - y).abs().to_f64())
        .fold(0.0, f64::max);
    let density = coeffs_to_density(partition, degree, &coeffs)?;
    let min_density = grid_min(&density, 1 << 12);
    if min_density.1 < -10.0 * delta {
        return Err(TransferError::Negative { x: min_density.0, value: min_density.1 });
    }
    let diagnostics = SolveDiagnostics {
        a,
        degree,
        t: t.clone(),
        t_clamped: params.t_clamped && opts.horizon.is_none(),
        method: opts.method,
        mass_before: mass.to_f64(),
        mass_correction,
        truncation_change: change,
        residual,
        min_density,
        entry_tol: transfer.entry_tol,
        working_bits,
    };
    Ok(InvariantSolution { density, coeffs, transfer, diagnostics })
}

#[cfg(test)]
mod tests;
