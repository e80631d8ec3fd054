//! Gauss–Legendre rules at arbitrary precision and an adaptive Gauss–Kronrod
//! integrator in `f64`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::numerics::PrecisionReal;

/// Nodes and weights of an `n`-point rule on [-1, 1].
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<PrecisionReal>,
    pub weights: Vec<PrecisionReal>,
}

type RuleCache = Mutex<HashMap<(usize, u32), Arc<GaussLegendre>>>;

fn cache() -> &'static RuleCache {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `(P_n(x), P_{n-1}(x))` by the three-term recurrence.
fn legendre(n: usize, x: &PrecisionReal, bits: u32) -> (PrecisionReal, PrecisionReal) {
    let mut p0 = PrecisionReal::one(bits);
    let mut p1 = x.with_bits(bits);
    for k in 1..n {
        let k = k as i64;
        let t = x.mul_to(&p1, bits).mul_i64(2 * k + 1);
        let p2 = (&t - &p0.mul_i64(k)).div_i64(k + 1);
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

fn legendre_f64(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 1..n {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// `n`-point Gauss–Legendre rule with nodes and weights within `2^-bits`.
pub fn gauss_legendre(n: usize, bits: u32) -> Arc<GaussLegendre> {
    assert!(n >= 1);
    if let Some(r) = cache().lock().expect("cache lock").get(&(n, bits)) {
        return r.clone();
    }
    let w = bits + 16;
    let one = PrecisionReal::one(w);
    let mut nodes = vec![PrecisionReal::zero(bits); n];
    let mut weights = vec![PrecisionReal::zero(bits); n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (pn, pm) = legendre_f64(n, x);
            let d = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let mut xr = PrecisionReal::from_f64(x, w);
        let mut good = 40u32;
        let mut deriv;
        // quadratic convergence from ~40 good bits; one extra pass fixes the derivative
        loop {
            let (pn, pm) = legendre(n, &xr, w);
            let den = &xr.square() - &one;
            deriv = (&xr.mul_to(&pn, w) - &pm).mul_i64(n as i64).div_to(&den, w).expect("interior node");
            let dx = pn.div_to(&deriv, w).expect("simple root");
            xr = &xr - &dx;
            if good >= w {
                break;
            }
            good = (2 * good).min(w);
        }
        let den = (&one - &xr.square()).mul_to(&deriv.square(), w);
        let wt = PrecisionReal::from_int(2, w).div_to(&den, w).expect("positive");
        nodes[i] = xr.with_bits(bits);
        nodes[n - 1 - i] = (-xr).with_bits(bits);
        weights[i] = wt.with_bits(bits);
        weights[n - 1 - i] = wt.with_bits(bits);
    }
    if n % 2 == 1 {
        nodes[n / 2] = PrecisionReal::zero(bits);
    }
    let rule = Arc::new(GaussLegendre { nodes, weights });
    cache().lock().expect("cache lock").insert((n, bits), rule.clone());
    rule
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive 15-point Gauss–Kronrod on `[a, b]` to absolute tolerance `tol`.
/// Returns `None` if 20000 subdivisions do not reach the tolerance.
pub fn gauss_kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Option<f64> {
    let mut stack = vec![(a, b, tol)];
    let mut total = 0.0;
    let mut evals = 0;
    while let Some((lo, hi, t)) = stack.pop() {
        let (v, err) = gk15(f, lo, hi);
        evals += 1;
        if err <= t.max(1e-300) || hi - lo < 1e-12 * (b - a).abs() {
            total += v;
            continue;
        }
        if evals > 20_000 {
            return None;
        }
        let mid = 0.5 * (lo + hi);
        stack.push((lo, mid, t / 2.0));
        stack.push((mid, hi, t / 2.0));
    }
    Some(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let r = gauss_legendre(7, 128);
        // exact up to degree 13: int x^12 = 2/13
        let mut s = PrecisionReal::zero(128);
        for (x, w) in r.nodes.iter().zip(&r.weights) {
            let mut p = PrecisionReal::one(128);
            for _ in 0..12 {
                p = p.mul_to(x, 128);
            }
            s = &s + &p.mul_to(w, 128);
        }
        let want = PrecisionReal::from_int(2, 128).div_i64(13);
        assert!((&s - &want).abs() <= PrecisionReal::pow2(-120, 128));
    }

    #[test]
    fn kronrod_on_smooth_and_peaked() {
        let v = gauss_kronrod(&|x: f64| x.exp(), 0.0, 1.0, 1e-13).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-13);
        let g = gauss_kronrod(&|x: f64| (-(x - 0.5) * (x - 0.5) / 2e-6).exp(), 0.0, 1.0, 1e-14).unwrap();
        assert!((g - (2.0 * PI * 1e-6).sqrt()).abs() < 1e-12);
    }
}
