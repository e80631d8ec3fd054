//! Simultaneous polynomial root finding (Aberth–Ehrlich).

use std::f64::consts::PI;

use crate::numerics::{PrecisionComplex, PrecisionReal};

use super::MatpowError;

/// Eigenvalue approximations with their certification data.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<PrecisionComplex>,
    /// `min_{i != j} |l_i - l_j|` (zero for a single eigenvalue is never reported; it is +inf-like `1`).
    pub separation: PrecisionReal,
    /// `max_i |q(l_i)|` for the characteristic polynomial `q`.
    pub residual: PrecisionReal,
}

const ITERATIONS_PER_STAGE: usize = 400;
const FIRST_STAGE_BITS: u32 = 128;

fn eval_with_derivative(
    coeffs: &[PrecisionComplex],
    z: &PrecisionComplex,
    bits: u32,
) -> (PrecisionComplex, PrecisionComplex) {
    let mut p = PrecisionComplex::zero(bits);
    let mut d = PrecisionComplex::zero(bits);
    for c in coeffs.iter().rev() {
        d = &d.mul_to(z, bits) + &p;
        p = &p.mul_to(z, bits) + c;
    }
    (p, d)
}

fn tolerance(bits: u32, z: &PrecisionComplex) -> PrecisionReal {
    let e = z.max_abs().magnitude_log2().unwrap_or(0).max(0);
    PrecisionReal::pow2(e - bits as i64 + 16, bits)
}

/// One Aberth sweep (Gauss–Seidel order). Returns whether every root moved less
/// than its tolerance.
fn sweep(
    coeffs: &[PrecisionComplex],
    z: &mut [PrecisionComplex],
    frozen: &mut [bool],
    bits: u32,
) -> bool {
    let n = z.len();
    let mut all = true;
    for k in 0..n {
        if frozen[k] {
            continue;
        }
        let (p, d) = eval_with_derivative(coeffs, &z[k], bits);
        if p.is_zero() {
            frozen[k] = true;
            continue;
        }
        let ratio = match p.div_to(&d, bits) {
            Ok(r) => r,
            Err(_) => {
                // stationary point of q: nudge off it
                all = false;
                z[k] = &z[k] + &PrecisionComplex::from_f64(1e-3, 1e-3, bits);
                continue;
            }
        };
        let mut s = PrecisionComplex::zero(bits);
        for j in 0..n {
            if j != k {
                let diff = &z[k] - &z[j];
                if let Ok(inv) = PrecisionComplex::one(bits).div_to(&diff, bits) {
                    s = &s + &inv;
                }
            }
        }
        let denom = &PrecisionComplex::one(bits) - &ratio.mul_to(&s, bits);
        let step = ratio.div_to(&denom, bits).unwrap_or(ratio);
        if step.max_abs() <= tolerance(bits, &z[k]) {
            frozen[k] = true;
        } else {
            all = false;
        }
        z[k] = &z[k] - &step;
    }
    all
}

/// Pair near-conjugate roots so a real polynomial yields an exactly
/// conjugate-symmetric root set.
fn symmetrize(z: &mut [PrecisionComplex], bits: u32) {
    let n = z.len();
    let tol = PrecisionReal::pow2(-(bits as i64) / 2, bits);
    let mut used = vec![false; n];
    for i in 0..n {
        if used[i] || z[i].im.signum() <= 0 {
            continue;
        }
        let cand = (0..n)
            .filter(|&j| j != i && !used[j] && z[j].im.signum() < 0)
            .min_by_key(|&j| (&z[j] - &z[i].conj()).max_abs());
        if let Some(j) = cand {
            if (&z[j] - &z[i].conj()).max_abs() <= tol {
                let re = (&z[i].re + &z[j].re).shl(-1);
                let im = (&z[i].im - &z[j].im).shl(-1);
                z[i] = PrecisionComplex::new(re.clone(), im.clone());
                z[j] = PrecisionComplex::new(re, -im);
                used[i] = true;
                used[j] = true;
            }
        }
    }
    for (k, v) in z.iter_mut().enumerate() {
        if !used[k] && v.im.abs() <= tol {
            v.im = PrecisionReal::zero(bits);
        }
    }
}

/// All roots of the monic polynomial `coeffs` (ascending, leading 1).
///
/// Iterates at 128 bits first and doubles the precision up to `bits`, so most
/// of the work happens at low precision.
pub fn polynomial_roots(
    coeffs: &[PrecisionReal],
    bits: u32,
) -> Result<Spectrum, MatpowError> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return Err(MatpowError::Input("polynomial of degree 0 has no roots".into()));
    }
    let cmax = coeffs[..n]
        .iter()
        .map(|c| c.abs().to_f64())
        .fold(0.0, f64::max);
    let radius = 1.0 + cmax;
    let mut z: Vec<PrecisionComplex> = (0..n)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / n as f64 + 0.4;
            PrecisionComplex::from_f64(radius * a.cos(), radius * a.sin(), bits)
        })
        .collect();
    let mut stage = FIRST_STAGE_BITS.min(bits);
    let mut iterations = 0;
    loop {
        let cs: Vec<PrecisionComplex> = coeffs
            .iter()
            .map(|c| PrecisionComplex::from_real(c.with_bits(stage)))
            .collect();
        for v in z.iter_mut() {
            *v = v.with_bits(stage);
        }
        let mut frozen = vec![false; n];
        for _ in 0..ITERATIONS_PER_STAGE {
            iterations += 1;
            if sweep(&cs, &mut z, &mut frozen, stage) {
                break;
            }
        }
        if stage == bits {
            break;
        }
        stage = (2 * stage).min(bits);
    }
    symmetrize(&mut z, bits);
    let cs: Vec<PrecisionComplex> = coeffs
        .iter()
        .map(|c| PrecisionComplex::from_real(c.with_bits(bits)))
        .collect();
    let mut residual = PrecisionReal::zero(bits);
    let mut worst_relative = 0.0f64;
    for v in &z {
        let (p, _) = eval_with_derivative(&cs, v, bits);
        let r = p.max_abs();
        // scale by the size of the terms so roots outside the unit disk are judged fairly
        let mag = v.max_abs().to_f64().max(1.0);
        let scale: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c.abs().to_f64() * mag.powi(k as i32))
            .sum::<f64>()
            .max(1.0);
        worst_relative = worst_relative.max(r.to_f64() / scale);
        residual = residual.max(r);
    }
    let limit = 2f64.powi(-(bits as i32) / 2);
    if worst_relative > limit {
        return Err(MatpowError::NoConvergence {
            iterations,
            residual: worst_relative,
        });
    }
    let mut separation = PrecisionReal::one(bits);
    for i in 0..n {
        for j in i + 1..n {
            let d = (&z[i] - &z[j]).abs();
            separation = separation.min(d);
        }
    }
    Ok(Spectrum {
        eigenvalues: z,
        separation,
        residual,
    })
}
