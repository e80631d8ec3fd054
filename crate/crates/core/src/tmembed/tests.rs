use super::*;
use crate::kernel::erfc;
use crate::numerics::PrecisionReal;

fn piecewise() -> DecideOptions {
    DecideOptions::default()
}

#[test]
fn configuration_counts() {
    let enc = enumerate_configs(&fixtures::reject_now(), CONFIG_CAP).unwrap();
    assert_eq!(enc.size(), 6);
    let two = ConfigEncoding { controls: 2, tape_length: 1 };
    assert_eq!(two.size(), 4);
    let three = ConfigEncoding { controls: 3, tape_length: 2 };
    assert_eq!(three.size(), 24);
    for k in 0..24 {
        assert_eq!(three.encode(three.decode(k)), k);
    }
    assert!(matches!(
        enumerate_configs(&fixtures::fill_then_accept(), 16),
        Err(TmError::ConfigCap { needed: 32, cap: 16 })
    ));
}

#[test]
fn successor_cases() {
    let tm = fixtures::accept_fast();
    let enc = enumerate_configs(&tm, CONFIG_CAP).unwrap();
    let s = enc.size();
    let home = enc.encode(tm.initial_config()) * s;
    let acc = enc.encode(Config { control: tm.accept, head: 0, tape: 1 });
    for t in 0..s {
        assert_eq!(succ(acc * s + t, &tm, &enc).unwrap(), s * s);
    }
    let rej = enc.encode(Config { control: tm.reject, head: 0, tape: 0 });
    assert_eq!(succ(rej * s + 2, &tm, &enc).unwrap(), home);
    assert_eq!(succ(2 * s * s - 1, &tm, &enc).unwrap(), home);
    assert_eq!(succ(s * s + 3, &tm, &enc).unwrap(), s * s + 4);
    // last counter value of a running configuration goes home
    assert_eq!(succ(home + s - 1, &tm, &enc).unwrap(), home);
    let next = enc.encode(tm.step(tm.initial_config()));
    assert_eq!(succ(home, &tm, &enc).unwrap(), next * s + 1);
    assert!(matches!(succ(2 * s * s, &tm, &enc), Err(TmError::Index { .. })));
}

#[test]
fn piecewise_map_hits_centres() {
    let es = embed(&fixtures::accept_fast(), &EmbedOptions::default()).unwrap();
    for k in 0..es.n {
        let x = PrecisionReal::from_ratio(&es.center(k), 96);
        let y = es.piecewise_eval(&x, 96);
        assert_eq!(y, PrecisionReal::from_ratio(&es.center(es.succ[k]), 96));
        assert_eq!(es.piecewise_eval_f64(es.center_f64(k)), es.center_f64(es.succ[k]));
    }
    // noiseless iteration from the home cell has the orbit's period
    let orbit = es.orbit(es.home());
    let start = es.center_f64(es.home());
    let mut x = start;
    for _ in 0..orbit.len() {
        x = es.piecewise_eval_f64(x);
    }
    assert_eq!(x, start);
    x = es.piecewise_eval_f64(start);
    for _ in 1..orbit.len() {
        assert_ne!(x, start);
        x = es.piecewise_eval_f64(x);
    }
}

#[test]
fn logistic_step() {
    let p = 96;
    let half = sigmoid_step(&PrecisionReal::zero(p), 6907, p);
    assert_eq!(half, PrecisionReal::one(p).shl(-1));
    for x in [0.0001, 0.003, 0.1, -0.02] {
        let a = sigmoid_step(&PrecisionReal::from_f64(x, p), 100, p);
        let b = sigmoid_step(&PrecisionReal::from_f64(-x, p), 100, p);
        assert!((&(&a + &b) - &PrecisionReal::one(p)).abs() <= PrecisionReal::pow2(-(p as i64) + 2, p));
    }
    let c = steepness(1e-3, 1e-3).unwrap();
    assert_eq!(c, 6907);
    let up = sigmoid_step(&PrecisionReal::from_f64(1e-3, p), c, p).to_f64();
    let down = sigmoid_step(&PrecisionReal::from_f64(-1e-3, p), c, p).to_f64();
    assert!(up >= 1.0 - 1e-3 && down <= 1e-3, "{up} {down}");
    assert!(steepness(0.5, 0.1).is_err());
}

#[test]
fn sigmoid_sum_tracks_the_step_map() {
    let es = embed(
        &fixtures::accept_fast(),
        &EmbedOptions { variant: VariantKind::Sigmoid, ..Default::default() },
    )
    .unwrap();
    let Variant::Sigmoid { beta, .. } = es.variant else { panic!() };
    let spec = es.analytic_map().unwrap();
    for k in 0..es.n {
        let y = spec.eval(&PrecisionReal::from_ratio(&es.center(k), 96), 96).to_f64();
        assert!((y - es.center_f64(es.succ[k])).abs() <= es.n as f64 * beta, "k = {k}");
    }
}

#[test]
fn sigmoid_sum_of_a_fixed_table_is_nearly_identity() {
    let mut es = embed(
        &fixtures::reject_now(),
        &EmbedOptions { variant: VariantKind::Sigmoid, ..Default::default() },
    )
    .unwrap();
    es.succ = (0..es.n).collect();
    let Variant::Sigmoid { beta, .. } = es.variant else { panic!() };
    let spec = es.analytic_map().unwrap();
    for k in 0..es.n {
        let c = es.center_f64(k);
        assert!((spec.eval_f64(c) - c).abs() <= es.n as f64 * beta);
    }
}

fn bisect_oracle(n: f64, c_exp: f64) -> f64 {
    let target = n.powf(-c_exp);
    let (mut lo, mut hi) = (1e-9f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        // tail grows with eps
        if libm::erfc(1.0 / (2.0 * n * mid * std::f64::consts::SQRT_2)) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn epsilon_solves_the_tail_equation() {
    // S = 2 gives N = 8
    let eps = choose_epsilon(2, VariantKind::Piecewise, 2.0).unwrap();
    assert!((eps - bisect_oracle(8.0, 2.0)).abs() <= 1e-12, "{eps}");
    let z = PrecisionReal::from_f64(1.0 / (16.0 * eps * std::f64::consts::SQRT_2), 128);
    let tail = erfc(&z, 128).to_f64();
    assert!((tail - 1.0 / 64.0).abs() <= 2f64.powi(-40));
    let e3 = choose_epsilon(2, VariantKind::Piecewise, 3.0).unwrap();
    assert!(e3 < eps);
    assert_eq!(choose_epsilon(4, VariantKind::Sigmoid, 2.0).unwrap(), 1.0 / 16.0);
    assert!(choose_epsilon(4, VariantKind::Piecewise, 1.5).is_err());
    assert!(matches!(
        choose_epsilon(1 << 12, VariantKind::Sigmoid, 4.0),
        Err(TmError::EpsilonFloor { .. })
    ));
}

#[test]
fn orbits_agree_with_simulation() {
    for (name, tm) in fixtures::all() {
        let es = embed(&tm, &EmbedOptions::default()).unwrap();
        assert!(es.returns_home(), "{name}");
        let accepts = matches!(simulate_machine(&tm, es.s_count), RunOutcome::Accept { .. });
        assert_eq!(es.orbit_covers_accept_block(), accepts, "{name}");
    }
}

#[test]
fn decisions_on_small_machines() {
    let acc = decide_by_measure(&fixtures::accept_fast(), &piecewise()).unwrap();
    assert_eq!(acc.verdict, Verdict::Accept, "w = {}", acc.weight);
    assert!(acc.weight >= 1.0 / 3.0);
    for tm in [fixtures::reject_now(), fixtures::looper()] {
        let d = decide_by_measure(&tm, &piecewise()).unwrap();
        assert_eq!(d.verdict, Verdict::Reject, "w = {}", d.weight);
        assert!(d.residual < 1e-10);
    }
}

#[test]
fn fixed_point_solve_matches_f64() {
    let tm = fixtures::reject_now();
    let fast = decide_by_measure(&tm, &piecewise()).unwrap();
    let slow = decide_by_measure(&tm, &DecideOptions { high_precision: Some(96), ..piecewise() }).unwrap();
    let diff = fast.masses.iter().zip(&slow.masses).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-10, "{diff}");
}

#[test]
fn stationary_f64_two_state() {
    // column-stochastic [[0.9, 0.2], [0.1, 0.8]] has stationary (2/3, 1/3)
    let (pi, res) = stationary_f64(&[0.9, 0.2, 0.1, 0.8], 2).unwrap();
    assert!((pi[0] - 2.0 / 3.0).abs() < 1e-15 && (pi[1] - 1.0 / 3.0).abs() < 1e-15);
    assert!(res < 1e-15);
}

#[test]
fn sigmoid_decisions_on_small_machines() {
    let opts = DecideOptions {
        embed: EmbedOptions { variant: VariantKind::Sigmoid, ..Default::default() },
        ..Default::default()
    };
    let want = [
        (fixtures::accept_fast(), Verdict::Accept),
        (fixtures::reject_now(), Verdict::Reject),
        (fixtures::looper(), Verdict::Reject),
    ];
    for (tm, v) in want {
        let d = decide_by_measure(&tm, &opts).unwrap();
        assert_eq!(d.verdict, v, "w = {}", d.weight);
    }
}
