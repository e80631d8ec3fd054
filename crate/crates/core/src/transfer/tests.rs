use num_bigint::BigUint;

use super::*;
use crate::kernel::{gauss_kronrod, kernel_eval_f64, normalization_f64, GaussianKernel, NoisySystem};
use crate::taylor::{ratio, AnalyticMapSpec, SigmoidTerm};

fn system(map: AnalyticMapSpec, eps: f64) -> NoisySystem {
    NoisySystem::new(map, GaussianKernel::from_f64(eps, 128).unwrap()).unwrap()
}

#[test]
fn partition_sizes() {
    let p = build_partition(&system(AnalyticMapSpec::identity(), 0.25), PARTITION_CAP).unwrap();
    assert_eq!(p.len(), 4);
    let centres: Vec<f64> = (0..4).map(|i| p.center_f64(i)).collect();
    assert_eq!(centres, vec![0.125, 0.375, 0.625, 0.875]);
    assert_eq!(p.lo(0, 64).to_f64(), 0.0);
    assert_eq!(p.hi(3, 64).to_f64(), 1.0);
    for i in 0..3 {
        assert_eq!(p.hi(i, 64), p.lo(i + 1, 64));
    }

    // η = max(Σ|w|C, max C) = 4 makes 1/(2η) the binding diameter
    let step = AnalyticMapSpec::SigmoidSum {
        base: ratio(1, 4),
        terms: vec![SigmoidTerm { weight: ratio(1, 2), shift: ratio(1, 2), steepness: ratio(4, 1) }],
    };
    let p = build_partition(&system(step, 0.5), PARTITION_CAP).unwrap();
    assert_eq!(p.len(), 8);

    let tight = system(AnalyticMapSpec::identity(), 0.001);
    assert!(matches!(
        build_partition(&tight, 100),
        Err(TransferError::PartitionCap { needed: 1000, cap: 100 })
    ));
}

#[test]
fn horizon_small_case() {
    let sp = horizon_and_truncation((-1f64).exp(), 1.0, 1.0, 1.0);
    assert_eq!(sp.t, BigUint::from(3u32));
    assert_eq!(sp.n, 1);
    assert!(!sp.t_clamped);
}

#[test]
fn horizon_is_a_big_integer() {
    let sp = horizon_and_truncation(1e-6, 0.1, 1.0, 2.0);
    assert!((148..=150).contains(&sp.t.bits()), "{} bits", sp.t.bits());
    let want = 1e6f64.ln() * 100f64.exp();
    let got: f64 = sp.t.to_string().parse().unwrap();
    assert!((got / want - 1.0).abs() < 1e-12, "{got} vs {want}");
    let clamped = horizon_and_truncation(1e-3, 0.01, 4.0, 2.0);
    assert!(clamped.t_clamped);
    assert_eq!(clamped.t.bits(), HORIZON_MAX_LOG2 as u64 + 1);
}

#[test]
fn constant_map_columns_are_the_kernel() {
    let c = 0.3;
    let sys = system(AnalyticMapSpec::constant(ratio(3, 10)), 0.25);
    let part = build_partition(&sys, PARTITION_CAP).unwrap();
    let tol = 1e-12;
    let p = assemble_transfer_matrix(&sys, part, 0, tol, 96).unwrap();
    let r = 0.5 / part.len() as f64;
    for i in 0..part.len() {
        let want = 2.0 * r * kernel_eval_f64(part.center_f64(i), c, 0.25);
        for j in 0..part.len() {
            let got = p.raw_entry(i, 0, j, 0).to_f64();
            assert!((got - want).abs() <= tol, "({i},{j}): {got} vs {want}");
        }
    }
}

fn hermite(l: usize, z: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, z);
    if l == 0 {
        return h0;
    }
    for k in 1..l {
        let h2 = z * h1 - k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// `r^l ∫_{a_j} ((y - x_j)/r)^m ∂_x^l K(x; f(y))|_{x = x_i} / l! dy` by adaptive quadrature.
fn entry_oracle(f: &dyn Fn(f64) -> f64, eps: f64, part: Partition, i: usize, l: usize, j: usize, m: usize) -> f64 {
    let r = 0.5 / part.len() as f64;
    let (xi, xj) = (part.center_f64(i), part.center_f64(j));
    let fact: f64 = (1..=l).map(|k| k as f64).product();
    let g = |y: f64| {
        let v = f(y);
        let w = v - xi;
        let phi = (-w * w / (2.0 * eps * eps)).exp() / (eps * (2.0 * std::f64::consts::PI).sqrt());
        let d = normalization_f64(v, eps) * hermite(l, w / eps) / (eps.powi(l as i32) * fact) * phi;
        ((y - xj) / r).powi(m as i32) * r.powi(l as i32) * d
    };
    gauss_kronrod(&g, xj - r, xj + r, 1e-13).unwrap()
}

#[test]
fn spot_entries_match_direct_quadrature() {
    let sys = system(AnalyticMapSpec::logistic(ratio(37, 10)), 0.25);
    let part = build_partition(&sys, PARTITION_CAP).unwrap();
    let tol = 1e-10;
    let p = assemble_transfer_matrix(&sys, part, 3, tol, 96).unwrap();
    let f = |x: f64| 3.7 * x * (1.0 - x);
    let picks = [(0, 0, 0, 0), (1, 2, 3, 1), (part.len() - 1, 3, 2, 3), (2, 1, 0, 2), (3, 0, part.len() - 1, 1)];
    for (i, l, j, m) in picks {
        let want = entry_oracle(&f, 0.25, part, i, l, j, m);
        let got = p.raw_entry(i, l, j, m).to_f64();
        assert!((got - want).abs() <= tol, "({i},{l},{j},{m}): {got} vs {want}");
    }
}

#[test]
fn series_assembly_agrees_with_quadrature() {
    let sys = system(AnalyticMapSpec::logistic(ratio(37, 10)), 0.25);
    let part = build_partition(&sys, PARTITION_CAP).unwrap();
    let tol = 1e-10;
    let q = assemble_transfer_matrix(&sys, part, 2, tol, 96).unwrap();
    let s = assemble_transfer_matrix_series(&sys, part, 2, tol, 96).unwrap();
    let diff = q.raw_matrix().max_abs_diff(&s.raw_matrix()).to_f64();
    assert!(diff <= 2.0 * tol, "{diff}");
    let sig = system(
        AnalyticMapSpec::SigmoidSum { base: ratio(1, 4), terms: vec![] },
        0.25,
    );
    assert!(assemble_transfer_matrix_series(&sig, part, 1, tol, 96).is_err());
}

#[test]
fn mass_is_conserved() {
    // degree high enough that Taylor truncation of the image is below the entry budget
    let sys = system(AnalyticMapSpec::logistic(ratio(37, 10)), 0.25);
    let part = build_partition(&sys, PARTITION_CAP).unwrap();
    let tol = 1e-9;
    let degree = 10;
    let p = assemble_transfer_matrix(&sys, part, degree, tol, 96).unwrap();
    let a = part.len();
    // uniform density: coefficient 1 at l = 0 in every piece
    let mut v = vec![PrecisionReal::zero(96); p.dim()];
    for i in 0..a {
        v[p.index(i, 0)] = PrecisionReal::one(96);
    }
    let out = p.raw_matrix().mul_vec(&v);
    let mass = coeff_mass(part, degree, &out).to_f64();
    assert!((mass - 1.0).abs() <= (a * (degree + 1)) as f64 * tol, "{mass}");

    let (m, corr) = p.mass_conserving();
    assert!(corr <= (a * (degree + 1)) as f64 * tol);
    let omega = p.mass_weights(m.bits());
    let n = p.dim();
    for col in 0..n {
        let s = (0..n).fold(PrecisionReal::zero(m.bits()), |acc, row| &acc + &m.get(row, col).mul_to(&omega[row], m.bits()));
        assert!((&s - &omega[col]).abs().to_f64() < 1e-25, "column {col}");
    }
}

#[test]
fn eigenvector_of_constant_map_is_the_column() {
    let sys = system(AnalyticMapSpec::constant(ratio(1, 2)), 0.25);
    let part = build_partition(&sys, PARTITION_CAP).unwrap();
    let p = assemble_transfer_matrix(&sys, part, 0, 1e-12, 96).unwrap();
    let v = stationary_eigenvector(&p).unwrap();
    let (m, _) = p.mass_conserving();
    // fixed point of a rank-one column-repeating matrix is its column, scaled to unit mass
    let col: Vec<f64> = (0..part.len()).map(|i| m.get(i, 0).to_f64()).collect();
    let mass: f64 = col.iter().sum::<f64>() / part.len() as f64;
    for (got, c) in v.iter().zip(&col) {
        assert!((got.to_f64() - c / mass).abs() < 1e-12);
    }
    let pv = m.mul_vec(&v);
    let res = pv.iter().zip(&v).map(|(a, b)| (a - b).abs().to_f64()).fold(0.0, f64::max);
    assert!(res <= 2f64.powi(-48));
}
