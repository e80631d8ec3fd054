use std::time::Instant;

use nalgebra::DMatrix;
use num_bigint::{BigInt, BigUint};
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

use common::random_matrix;
use noisy_dynamics::matpow::{
    char_poly, default_bound, discriminant_curve_eval, eigenvalues, matrix_power,
    matrix_power_squaring, perturb_to_distinct, poly_at_matrix, polynomial_roots,
    power_interpolant, SquareMatrix,
};
use noisy_dynamics::numerics::{PrecisionComplex, PrecisionReal};

/// Exact characteristic polynomial over the integers (Faddeev–LeVerrier in
/// BigInt; every division by k is exact).
fn exact_char_poly(a: &[i64], n: usize) -> Vec<BigInt> {
    let a: Vec<BigInt> = a.iter().map(|&v| BigInt::from(v)).collect();
    let mul = |x: &[BigInt], y: &[BigInt]| -> Vec<BigInt> {
        let mut out = vec![BigInt::from(0); n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out[i * n + j] += &x[i * n + k] * &y[k * n + j];
                }
            }
        }
        out
    };
    let mut c = vec![BigInt::from(0); n + 1];
    c[n] = BigInt::one();
    let mut mk: Vec<BigInt> = (0..n * n)
        .map(|i| if i % (n + 1) == 0 { BigInt::one() } else { BigInt::from(0) })
        .collect();
    for k in 1..=n {
        let am = mul(&a, &mk);
        let tr: BigInt = (0..n).map(|i| &am[i * n + i]).sum();
        let ck = -tr / BigInt::from(k);
        mk = am;
        for i in 0..n {
            mk[i * n + i] += &ck;
        }
        c[n - k] = ck;
    }
    c
}

#[test]
fn char_poly_of_integer_matrices_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let a: Vec<i64> = (0..36).map(|_| rng.random_range(-9..=9)).collect();
        let m = SquareMatrix::from_f64(6, &a.iter().map(|&v| v as f64).collect::<Vec<_>>(), 16);
        let got = char_poly(&m);
        let want = exact_char_poly(&a, 6);
        for (g, w) in got.iter().zip(&want) {
            assert_eq!(g.to_ratio(), w.clone().into());
        }
    }
}

#[test]
fn eigenvalues_have_small_residuals() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_matrix(&mut rng, 8, 0.9);
    let m = SquareMatrix::from_f64(8, &a, 160);
    let spec = eigenvalues(&m, 160).unwrap();
    let coeffs = char_poly(&m);
    for z in &spec.eigenvalues {
        // independent Horner evaluation in complex arithmetic
        let mut acc = PrecisionComplex::zero(160);
        for c in coeffs.iter().rev() {
            acc = &(&acc * z) + &PrecisionComplex::from_real(c.clone());
        }
        assert!(acc.max_abs().to_f64() < 2f64.powi(-80));
    }
    let diag = SquareMatrix::from_f64(3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0], 96);
    let s = eigenvalues(&diag, 96).unwrap();
    assert!(s.residual.is_zero());
}

#[test]
fn discriminant_matches_eigenvalue_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = random_matrix(&mut rng, 4, 1.0);
    let m = SquareMatrix::from_f64(4, &a, 128);
    let t = PrecisionReal::from_f64(0.3, 128);
    let disc = discriminant_curve_eval(&m, &t).to_f64();
    let mt: Vec<f64> = (0..16)
        .map(|k| {
            let d = if k % 5 == 0 { (k / 5 + 1) as f64 } else { 0.0 };
            0.7 * a[k] + 0.3 * d
        })
        .collect();
    let ev = DMatrix::from_row_slice(4, 4, &mt).complex_eigenvalues();
    let mut prod = nalgebra::Complex::new(1.0, 0.0);
    for i in 0..4 {
        for j in i + 1..4 {
            let d = ev[i] - ev[j];
            prod *= d * d;
        }
    }
    assert!(prod.im.abs() < 1e-9);
    assert!((disc - prod.re).abs() < 1e-9 * prod.re.abs().max(1.0), "{disc} vs {}", prod.re);
}

#[test]
fn interpolant_reproduces_nodes_for_large_exponent() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    // random column-stochastic 6x6
    let mut a: Vec<f64> = (0..36).map(|_| rng.random_range(0.0..1.0)).collect();
    for j in 0..6 {
        let s: f64 = (0..6).map(|i| a[i * 6 + j]).sum();
        for i in 0..6 {
            a[i * 6 + j] /= s;
        }
    }
    let m = SquareMatrix::from_f64(6, &a, 200);
    let spec = polynomial_roots(&char_poly(&m), 200).unwrap();
    let e = BigUint::from(1_000_000_000u64);
    let poly = power_interpolant(&spec, &e, &default_bound(), 100)
        .unwrap()
        .value()
        .unwrap();
    assert!(poly.node_residual.to_f64() <= 2f64.powi(-50));
}

#[test]
fn interpolant_at_matrix_matches_squaring() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_matrix(&mut rng, 8, 0.99);
    let m = SquareMatrix::from_f64(8, &a, 256);
    let spec = polynomial_roots(&char_poly(&m), 256).unwrap();
    let e = BigUint::from(12u32);
    let poly = power_interpolant(&spec, &e, &default_bound(), 128).unwrap().value().unwrap();
    let got = poly_at_matrix(&poly.coeffs, &m, 128).unwrap().matrix;
    let want = matrix_power_squaring(&m, &e, 128, &default_bound()).unwrap().value().unwrap();
    assert!(got.max_abs_diff(&want).to_f64() < 2f64.powi(-40));
}

#[test]
fn perturbation_keeps_identity_power_close() {
    let i = SquareMatrix::identity(2, 64);
    let e = BigUint::from(16u32);
    let delta = PrecisionReal::pow2(-20, 64);
    let p = perturb_to_distinct(&i, &e, &delta).unwrap();
    let a = matrix_power_squaring(&p.matrix, &e, 64, &default_bound()).unwrap().value().unwrap();
    assert!(a.max_abs_diff(&i).to_f64() <= 2f64.powi(-20));
    let spec = eigenvalues(&p.matrix, p.matrix.bits()).unwrap();
    assert!(spec.separation.signum() > 0);
}

#[test]
fn semigroup_property() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = random_matrix(&mut rng, 5, 0.95);
    let m = SquareMatrix::from_f64(5, &a, 128);
    let p = 96;
    let pw = |e: u64| matrix_power(&m, &BigUint::from(e), p, &default_bound()).unwrap().value().unwrap();
    let lhs = pw(1000);
    let rhs = pw(400).mul(&pw(600));
    assert!(lhs.max_abs_diff(&rhs).to_f64() <= 2f64.powi(-(p as i32) + 10));
}

#[test]
fn random_contractions_against_squaring() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let exps = [
        BigUint::from(3u32),
        BigUint::from(1000u32),
        BigUint::from(1_000_000_000u32),
        BigUint::one() << 60usize,
    ];
    for case in 0..3 {
        let a = random_matrix(&mut rng, 8, 0.99);
        let m = SquareMatrix::from_f64(8, &a, 128);
        let f = DMatrix::from_row_slice(8, 8, &a);
        let cube = (&f * &f * &f).transpose();
        let got = matrix_power(&m, &exps[0], 128, &default_bound()).unwrap().value().unwrap();
        for (g, w) in got.to_f64().iter().zip(cube.iter()) {
            assert!((g - w).abs() < 1e-12);
        }
        for e in &exps {
            let t = Instant::now();
            let got = matrix_power(&m, e, 128, &default_bound()).unwrap().value().unwrap();
            assert!(t.elapsed().as_secs() < 60, "case {case}, E = {e}");
            let want = matrix_power_squaring(&m, e, 128, &default_bound()).unwrap().value().unwrap();
            assert!(got.max_abs_diff(&want).to_f64() <= 1e-8, "case {case}, E = {e}");
        }
    }
}
