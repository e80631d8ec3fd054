#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn spectral_radius(a: &[f64], n: usize) -> f64 {
    let m = DMatrix::from_row_slice(n, n, a);
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Random matrix scaled to spectral radius `rho`.
pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, rho: f64) -> Vec<f64> {
    let a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let r = spectral_radius(&a, n);
    a.iter().map(|v| v * rho / r).collect()
}
