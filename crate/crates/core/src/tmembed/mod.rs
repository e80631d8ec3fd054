//! Turing machines compiled into noisy maps of [0, 1].
//!
//! A machine with `S` configurations becomes a map on `N = 2S²` cells whose
//! noiseless orbit from the initial block spends most of its time in
//! `[1/2, 1]` exactly when the machine accepts. [`decide_by_measure`] reads
//! the verdict off the invariant measure of the noisy system.

mod embed;
pub mod fixtures;
mod machine;
mod montecarlo;

use thiserror::Error;

use crate::kernel::{normalization_f64, GaussianKernel, KernelError};
use crate::numerics::PrecisionReal;
use crate::transfer::{interval_markov_matrix, stationary_vector, TransferError};

pub use embed::{
    choose_epsilon, default_c_exp, embed, sigmoid_step, steepness, succ, EmbedOptions, EmbeddedSystem, Variant,
    VariantKind,
};
pub use machine::{
    enumerate_configs, simulate_machine, Config, ConfigEncoding, Move, RunOutcome, Transition,
    TuringMachine, CONFIG_CAP,
};
pub use montecarlo::{monte_carlo_invariant, monte_carlo_merged, monte_carlo_system, Histogram};

#[derive(Debug, Clone, Error)]
pub enum TmError {
    #[error("invalid machine: {0}")]
    Invalid(String),
    #[error("{needed} configurations exceed the cap {cap}")]
    ConfigCap { needed: u128, cap: usize },
    #[error("cell index {k} out of range 0..{n}")]
    Index { k: usize, n: usize },
    #[error("noise level {eps:e} is below the precision floor; needs about {needed_bits} bits")]
    EpsilonFloor { eps: f64, needed_bits: u32 },
    #[error("stationary solve failed: {0}")]
    Solver(String),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
    Indeterminate,
}

#[derive(Debug, Clone)]
pub struct DecideOptions {
    pub embed: EmbedOptions,
    /// Weights at or below this reject.
    pub w_reject: f64,
    /// Weights at or above this accept.
    pub w_accept: f64,
    /// Gauss–Legendre nodes per source cell; `None` picks 1 for the
    /// piecewise map (exact) and 8 for the sigmoid map.
    pub nodes: Option<usize>,
    /// Solve in fixed point at `bits` rather than in `f64`. Cubic in `N`
    /// with big-integer arithmetic, so only practical for small machines.
    pub high_precision: Option<u32>,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            embed: EmbedOptions::default(),
            w_reject: 0.05,
            w_accept: 1.0 / 3.0,
            nodes: None,
            high_precision: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Decision {
    pub verdict: Verdict,
    /// Invariant mass on `[1/2, 1]`.
    pub weight: f64,
    /// Stationary cell masses.
    pub masses: Vec<f64>,
    /// `||M π - π||∞` of the stationary solve.
    pub residual: f64,
    pub system: EmbeddedSystem,
}

/// Step map of an embedded system in `f64`.
pub fn map_f64(es: &EmbeddedSystem) -> Result<Box<dyn Fn(f64) -> f64 + Send + Sync + '_>, TmError> {
    Ok(match es.variant {
        Variant::Piecewise => Box::new(move |x| es.piecewise_eval_f64(x)),
        Variant::Sigmoid { .. } => {
            let spec = es.analytic_map()?;
            Box::new(move |x| spec.eval_f64(x))
        }
    })
}

/// `P(lo < v + ε Z < hi)` for standard normal `Z`, without cancellation in the tails.
fn gauss_mass(lo: f64, hi: f64, v: f64, s: f64) -> f64 {
    let upper = |a: f64| 0.5 * libm::erfc(a / s);
    if lo >= v {
        upper(lo - v) - upper(hi - v)
    } else if hi <= v {
        upper(v - hi) - upper(v - lo)
    } else {
        1.0 - upper(v - lo) - upper(hi - v)
    }
}

/// Row-major `f64` version of [`interval_markov_matrix`]: entry `(i, j)` is
/// the probability of moving from a uniform point of cell `j` into cell `i`.
pub fn markov_matrix_f64(map: &dyn Fn(f64) -> f64, eps: f64, cells: usize, nodes: usize) -> Vec<f64> {
    let rule = crate::kernel::gauss_legendre(nodes, 64);
    let (us, ws): (Vec<f64>, Vec<f64>) =
        rule.nodes.iter().zip(&rule.weights).map(|(u, w)| (u.to_f64(), w.to_f64())).unzip();
    let h = 1.0 / cells as f64;
    let s = eps * std::f64::consts::SQRT_2;
    let mut m = vec![0.0; cells * cells];
    for j in 0..cells {
        let mid = (j as f64 + 0.5) * h;
        for (u, w) in us.iter().zip(&ws) {
            let v = map(mid + 0.5 * h * u);
            let c = normalization_f64(v, eps) * 0.5 * w;
            for i in 0..cells {
                let p = gauss_mass(i as f64 * h, (i + 1) as f64 * h, v, s);
                m[i * cells + j] += c * p;
            }
        }
    }
    m
}

/// Stationary vector of a column-stochastic row-major matrix: solves
/// `(M - I) π = 0` with the first equation replaced by `Σ π = 1`, by
/// partial-pivoting elimination plus one refinement step. Returns `π` and
/// `||M π - π||∞`.
pub fn stationary_f64(m: &[f64], n: usize) -> Result<(Vec<f64>, f64), TmError> {
    let mut a: Vec<f64> = m.to_vec();
    for i in 0..n {
        a[i * n + i] -= 1.0;
    }
    a[..n].iter_mut().for_each(|x| *x = 1.0);
    let mut b = vec![0.0; n];
    b[0] = 1.0;
    let lu = lu_factor(a.clone(), n)?;
    let mut x = lu_solve(&lu, &b);
    // one round of refinement
    let r: Vec<f64> = (0..n).map(|i| b[i] - dot(&a[i * n..(i + 1) * n], &x)).collect();
    let dx = lu_solve(&lu, &r);
    x.iter_mut().zip(&dx).for_each(|(x, d)| *x += d);
    let residual = (0..n)
        .map(|i| (dot(&m[i * n..(i + 1) * n], &x) - x[i]).abs())
        .fold(0.0, f64::max);
    Ok((x, residual))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Lu {
    n: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
}

fn lu_factor(mut a: Vec<f64>, n: usize) -> Result<Lu, TmError> {
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
            .expect("non-empty range");
        if a[p * n + k] == 0.0 {
            return Err(TmError::Solver(format!("singular at column {k}")));
        }
        if p != k {
            for c in 0..n {
                a.swap(k * n + c, p * n + c);
            }
            perm.swap(k, p);
        }
        let (top, rest) = a.split_at_mut((k + 1) * n);
        let pivot_row = &top[k * n..];
        let piv = pivot_row[k];
        for row in rest.chunks_mut(n) {
            let f = row[k] / piv;
            if f != 0.0 {
                row[k] = f;
                for (x, y) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                    *x -= f * y;
                }
            }
        }
    }
    Ok(Lu { n, a, perm })
}

fn lu_solve(lu: &Lu, b: &[f64]) -> Vec<f64> {
    let n = lu.n;
    let mut y: Vec<f64> = lu.perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        let s = dot(&lu.a[i * n..i * n + i], &y[..i]);
        y[i] -= s;
    }
    for i in (0..n).rev() {
        let s = dot(&lu.a[i * n + i + 1..(i + 1) * n], &y[i + 1..]);
        y[i] = (y[i] - s) / lu.a[i * n + i];
    }
    y
}

fn stationary_high_precision(
    es: &EmbeddedSystem,
    nodes: usize,
    bits: u32,
) -> Result<(Vec<f64>, f64), TmError> {
    let kernel = GaussianKernel::from_f64(es.eps, bits)?;
    let spec = match es.variant {
        Variant::Sigmoid { .. } => Some(es.analytic_map()?),
        Variant::Piecewise => None,
    };
    let map = |x: &PrecisionReal, w: u32| match &spec {
        Some(s) => s.eval(x, w),
        None => es.piecewise_eval(x, w),
    };
    let m = interval_markov_matrix(&map, &kernel, es.n, nodes, bits);
    let ones = vec![PrecisionReal::one(bits); es.n];
    let (v, residual) = stationary_vector(&m, &ones, 0, bits)?;
    Ok((v.iter().map(PrecisionReal::to_f64).collect(), residual))
}

/// Compile `tm`, solve for the invariant cell masses of the noisy system, and
/// compare the mass on `[1/2, 1]` with the thresholds.
pub fn decide_by_measure(tm: &TuringMachine, opts: &DecideOptions) -> Result<Decision, TmError> {
    let es = embed(tm, &opts.embed)?;
    let nodes = opts.nodes.unwrap_or(match es.variant {
        Variant::Piecewise => 1,
        Variant::Sigmoid { .. } => 8,
    });
    let (masses, residual) = match opts.high_precision {
        Some(bits) => stationary_high_precision(&es, nodes, bits)?,
        None => {
            let f = map_f64(&es)?;
            let m = markov_matrix_f64(&*f, es.eps, es.n, nodes);
            stationary_f64(&m, es.n)?
        }
    };
    let weight: f64 = masses[es.n / 2..].iter().sum();
    let verdict = if weight >= opts.w_accept {
        Verdict::Accept
    } else if weight <= opts.w_reject {
        Verdict::Reject
    } else {
        Verdict::Indeterminate
    };
    log::info!("S = {}, N = {}, eps = {:e}, w = {weight}, residual = {residual:e}", es.s_count, es.n, es.eps);
    Ok(Decision { verdict, weight, masses, residual, system: es })
}

#[cfg(test)]
mod tests;
