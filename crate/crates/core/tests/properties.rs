use std::collections::BTreeMap;

use num_bigint::BigUint;
use proptest::prelude::*;

use noisy_dynamics::kernel::{gauss_kronrod, kernel_eval_f64, memory_bound, GaussianKernel, NoisySystem};
use noisy_dynamics::matpow::{default_bound, matrix_power, matrix_power_squaring, SquareMatrix};
use noisy_dynamics::numerics::{
    arg, exp_real, log_real, pi, pow_complex, pow_real, PowerResult, PrecisionComplex, PrecisionReal,
};
use noisy_dynamics::taylor::{moment_integral, ratio, AnalyticMapSpec, PiecewiseTaylorDensity, SigmoidTerm};
use noisy_dynamics::tmembed::{
    embed, enumerate_configs, simulate_machine, EmbedOptions, Move, RunOutcome, Transition, TuringMachine,
};
use noisy_dynamics::transfer::{distance, measure_weight, DistanceMode};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

fn real(v: f64, bits: u32) -> PrecisionReal {
    PrecisionReal::from_f64(v, bits)
}

proptest! {
    #![proptest_config(cfg(48))]

    #[test]
    fn exp_log_roundtrip(x in 1e-6f64..1e6) {
        let p = 96;
        let xr = real(x, p + 32);
        let back = exp_real(&log_real(&xr, p + 40).unwrap(), p).unwrap();
        let tol = x.max(1.0) * 2f64.powi(-(p as i32) + 2);
        prop_assert!((&back - &xr.with_bits(p)).abs().to_f64() <= tol);
    }

    #[test]
    fn more_precision_agrees(x in -20.0f64..20.0) {
        let (p, q) = (80, 144);
        let xr = real(x, q);
        let lo = exp_real(&xr, p).unwrap();
        let hi = exp_real(&xr, q).unwrap();
        prop_assert!((&lo - &hi.with_bits(p)).abs().to_f64() <= 2f64.powi(-(p as i32) + 1));
    }

    #[test]
    fn power_exponents_add(x in 0.5f64..1.02, a in 1u64..5000, b in 1u64..5000) {
        let p = 96;
        let xr = real(x, p);
        let pw = |e: u64| pow_real(&xr, &BigUint::from(e), p, &default_bound()).unwrap().value().unwrap();
        let (xa, xb) = (pw(a), pw(b));
        let lhs = pw(a + b);
        let rhs = xa.mul_to(&xb, p);
        // each factor carries 2^-p, which the product scales by the other factor
        let scale = 1.0 + xa.to_f64() + xb.to_f64();
        prop_assert!((&lhs - &rhs).abs().to_f64() <= 2f64.powi(-(p as i32) + 4) * scale);
    }

    #[test]
    fn phase_multiplies(theta in -3.1f64..3.1, r in 0.999f64..1.0, e in 2u64..100_000) {
        let p = 96;
        let z = PrecisionComplex::from_f64(r * theta.cos(), r * theta.sin(), p);
        let w = pow_complex(&z, &BigUint::from(e), p, &default_bound()).unwrap().value().unwrap();
        prop_assume!(w.max_abs().to_f64() > 1e-6);
        let two_pi = pi(p + 64).shl(1);
        let want = arg(&z, p + 40).unwrap().mul_i64(e as i64);
        let got = arg(&w, p).unwrap().with_bits(p + 64);
        let turns = (&(&want - &got).with_bits(p + 64)).div_to(&two_pi, p + 64).unwrap().round();
        let resid = &(&want - &got) - &two_pi.mul_int(&turns);
        // the angle of |w| ~ r^e is conditioned by 1/|w|
        prop_assert!(resid.abs().to_f64() <= 2f64.powi(-(p as i32) + 6) / w.max_abs().to_f64());
    }

    #[test]
    fn overflow_reports_are_sound(x in 1.01f64..4.0, e in 100u64..100_000) {
        let xr = real(x, 64);
        let bound = PrecisionReal::pow2(64, 64);
        if let PowerResult::Overflow(_) = pow_real(&xr, &BigUint::from(e), 64, &bound).unwrap() {
            // low-precision check that x^E exceeds B / 2
            prop_assert!(e as f64 * x.log2() > 63.0);
        } else {
            prop_assert!(e as f64 * x.log2() <= 64.0 + 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(cfg(12))]

    #[test]
    fn spectral_power_matches_squaring(entries in prop::collection::vec(-0.3f64..0.3, 9), e in 2u64..1_000_000) {
        let m = SquareMatrix::from_f64(3, &entries, 128);
        let p = 96;
        let a = matrix_power(&m, &BigUint::from(e), p, &default_bound()).unwrap().value().unwrap();
        let b = matrix_power_squaring(&m, &BigUint::from(e), p, &default_bound()).unwrap().value().unwrap();
        prop_assert!(a.max_abs_diff(&b).to_f64() <= 2f64.powi(-(p as i32) + 8));
    }
}

fn sigmoid_fixture() -> AnalyticMapSpec {
    AnalyticMapSpec::SigmoidSum {
        base: ratio(1, 10),
        terms: vec![
            SigmoidTerm { weight: ratio(1, 2), shift: ratio(3, 10), steepness: ratio(12, 1) },
            SigmoidTerm { weight: ratio(3, 10), shift: ratio(7, 10), steepness: ratio(8, 1) },
        ],
    }
}

proptest! {
    #![proptest_config(cfg(24))]

    #[test]
    fn taylor_coefficients_respect_eta(xc in 0.0f64..1.0) {
        for f in [sigmoid_fixture(), AnalyticMapSpec::logistic(ratio(37, 10))] {
            let eta = f.eta();
            let a = f.taylor_coeffs(&real(xc, 96), 8, 96).unwrap();
            for (k, c) in a.iter().enumerate() {
                prop_assert!(c.to_f64().abs() <= eta.powi(k as i32) * (1.0 + 2f64.powi(-10)));
            }
        }
    }

    #[test]
    fn moment_integrals_add(a in 0.0f64..0.95, frac in 0.1f64..0.9, m in 0u32..5, k in 0u32..4) {
        let f = sigmoid_fixture();
        let width = 0.9 / (2.0 * f.eta());
        let (a, c) = (a * (1.0 - width), a * (1.0 - width) + width);
        let b = a + frac * width;
        let xj = real(0.5 * (a + c), 96);
        let d = real(1e-10, 64);
        let mi = |lo: f64, hi: f64| {
            moment_integral(&f, &real(lo, 96), &real(hi, 96), &xj, m, k, &d).unwrap().to_f64()
        };
        prop_assert!((mi(a, c) - mi(a, b) - mi(b, c)).abs() <= 2e-10);
    }

    #[test]
    fn kernel_is_normalised(x in 0.0f64..1.0, eps in 0.02f64..0.5) {
        let mass = gauss_kronrod(&|y| kernel_eval_f64(y, x, eps), 0.0, 1.0, 1e-13).unwrap();
        prop_assert!((mass - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn memory_bound_decreases(e1 in 0.01f64..0.24, gap in 1e-4f64..0.1) {
        let e2 = (e1 + gap).min(0.2419);
        prop_assume!(e2 > e1);
        let m = |e: f64| memory_bound(&real(e, 96), 96).unwrap();
        prop_assert!(m(e2) < m(e1));
    }
}

fn poly_density() -> impl Strategy<Value = PiecewiseTaylorDensity> {
    (1usize..5, 0usize..4).prop_flat_map(|(pieces, degree)| {
        prop::collection::vec(prop::collection::vec(-1.0f64..1.0, degree + 1), pieces).prop_map(|cs| {
            let coeffs = cs.into_iter().map(|c| c.into_iter().map(|v| real(v, 96)).collect()).collect();
            PiecewiseTaylorDensity::uniform_partition(coeffs, 96).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(cfg(32))]

    #[test]
    fn weights_are_additive(d in poly_density(), a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
        let mut v = [a, b, c];
        v.sort_by(f64::total_cmp);
        let [a, b, c] = v.map(|x| real(x, 96));
        let whole = measure_weight(&d, &a, &c);
        let parts = &measure_weight(&d, &a, &b) + &measure_weight(&d, &b, &c);
        prop_assert!((&whole - &parts).abs().to_f64() <= 1e-25);
    }

    #[test]
    fn total_variation_below_sup_distance(d1 in poly_density(), d2 in poly_density()) {
        let tv = distance(&d1, &d2, DistanceMode::TotalVariation).to_f64();
        let sup = distance(&d1, &d2, DistanceMode::LInf).to_f64();
        prop_assert!(tv <= 0.5 * sup + 1e-12);
    }
}

fn machine() -> impl Strategy<Value = TuringMachine> {
    (3usize..6, 1usize..3).prop_flat_map(|(controls, tape_length)| {
        let working = controls - 2;
        let rule = (0..controls, any::<bool>(), 0u8..3);
        (prop::collection::vec(rule, 2 * working), prop::collection::vec(any::<bool>(), tape_length)).prop_map(
            move |(rules, tape_init)| {
                let mut delta = BTreeMap::new();
                for (i, (next, write, mv)) in rules.into_iter().enumerate() {
                    let mv = [Move::Left, Move::Right, Move::Stay][mv as usize];
                    delta.insert((i / 2, i % 2 == 1), Transition { next, write, mv });
                }
                TuringMachine {
                    controls: (0..controls).map(|i| format!("q{i}")).collect(),
                    initial: 0,
                    accept: controls - 2,
                    reject: controls - 1,
                    tape_length,
                    tape_init,
                    delta,
                }
            },
        )
    })
}

proptest! {
    #![proptest_config(cfg(32))]

    #[test]
    fn encoding_roundtrips(tm in machine(), seed in any::<u64>()) {
        let enc = enumerate_configs(&tm, 512).unwrap();
        let k = (seed as usize) % enc.size();
        let c = enc.decode(k);
        prop_assert_eq!(enc.encode(c), k);
        prop_assert!(c.control < tm.controls.len() && c.head < tm.tape_length);
    }

    #[test]
    fn succ_table_tracks_the_machine(tm in machine()) {
        let es = embed(&tm, &EmbedOptions::default()).unwrap();
        prop_assert!(es.returns_home());
        let accepts = matches!(simulate_machine(&tm, es.s_count), RunOutcome::Accept { .. });
        prop_assert_eq!(es.orbit_covers_accept_block(), accepts);
    }
}

#[test]
fn constant_map_pushes_any_density_onto_the_kernel() {
    use noisy_dynamics::kernel::pushforward_density;
    let sys = NoisySystem::new(
        AnalyticMapSpec::constant(ratio(2, 5)),
        GaussianKernel::from_f64(0.1, 96).unwrap(),
    )
    .unwrap();
    let mu = PiecewiseTaylorDensity::uniform_partition(vec![vec![real(0.5, 96), real(1.0, 96)], vec![real(1.5, 96)]], 96)
        .unwrap();
    let rho = pushforward_density(&mu, &sys, 11).unwrap();
    for (x, v) in rho {
        assert_close(v, kernel_eval_f64(x, 0.4, 0.1), 1e-8);
    }
}

fn assert_close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b}");
}
