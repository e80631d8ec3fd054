use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::numerics::{exp_real, parse_rational, PrecisionReal, GUARD_BITS};

use super::poly::{poly_eval, poly_eval_f64, poly_shift};
use super::series::logistic_series;
use super::TaylorError;

/// One summand `weight / (1 + exp(-steepness (x - shift)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmoidTerm {
    pub weight: BigRational,
    pub shift: BigRational,
    pub steepness: BigRational,
}

type Evaluator = dyn Fn(&PrecisionReal, u32) -> PrecisionReal + Send + Sync;

/// A map known only through evaluation, with a trusted Taylor bound.
#[derive(Clone)]
pub struct BlackBox {
    pub name: String,
    pub eval: Arc<Evaluator>,
    pub eta: f64,
}

impl fmt::Debug for BlackBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BlackBox({}, eta = {})", self.name, self.eta)
    }
}

/// A self-map of [0, 1] with `|f^(k)| <= k! eta^k`.
#[derive(Debug, Clone)]
pub enum AnalyticMapSpec {
    /// Ascending coefficients in `x`.
    Polynomial(Vec<BigRational>),
    SigmoidSum {
        base: BigRational,
        terms: Vec<SigmoidTerm>,
    },
    BlackBox(BlackBox),
}

fn rat(v: &Value, what: &str) -> Result<BigRational, TaylorError> {
    let s = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => return Err(TaylorError::Invalid(format!("{what}: expected a number"))),
    };
    parse_rational(&s).map_err(|e| TaylorError::Invalid(format!("{what}: {e}")))
}

pub(crate) fn rat_to_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn rat_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Logistic `1 / (1 + e^-z)` at `bits`, evaluated on the side where the
/// exponential is at most 1.
pub(crate) fn logistic(z: &PrecisionReal, bits: u32) -> PrecisionReal {
    let w = bits + 8;
    let cut = PrecisionReal::from_int(bits as i64 + 16, w);
    if z.abs() > cut {
        return if z.is_negative() {
            PrecisionReal::zero(bits)
        } else {
            PrecisionReal::one(bits)
        };
    }
    let e = exp_real(&(-z.abs()), w).expect("argument bounded by the cut");
    let one = PrecisionReal::one(w);
    let den = &one + &e;
    let v = if z.is_negative() { e } else { one };
    v.div_to(&den, bits).expect("denominator >= 1")
}

impl AnalyticMapSpec {
    /// Parse the map JSON (`polynomial`, `sigmoid_sum` or `logistic`).
    pub fn from_json(v: &Value) -> Result<Self, TaylorError> {
        let ty = v
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| TaylorError::Invalid("missing \"type\"".into()))?;
        let spec = match ty {
            "polynomial" => {
                let cs = v
                    .get("coeffs")
                    .and_then(Value::as_array)
                    .ok_or_else(|| TaylorError::Invalid("missing \"coeffs\"".into()))?;
                if cs.is_empty() {
                    return Err(TaylorError::Invalid("empty coefficient list".into()));
                }
                AnalyticMapSpec::Polynomial(
                    cs.iter()
                        .enumerate()
                        .map(|(i, c)| rat(c, &format!("coeffs[{i}]")))
                        .collect::<Result<_, _>>()?,
                )
            }
            "logistic" => {
                let l = rat(
                    v.get("lambda")
                        .ok_or_else(|| TaylorError::Invalid("missing \"lambda\"".into()))?,
                    "lambda",
                )?;
                AnalyticMapSpec::logistic(l)
            }
            "sigmoid_sum" => {
                let base = rat(
                    v.get("base")
                        .ok_or_else(|| TaylorError::Invalid("missing \"base\"".into()))?,
                    "base",
                )?;
                let terms = v
                    .get("terms")
                    .and_then(Value::as_array)
                    .ok_or_else(|| TaylorError::Invalid("missing \"terms\"".into()))?
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        let field = |k: &str| {
                            t.get(k)
                                .ok_or_else(|| TaylorError::Invalid(format!("terms[{i}]: missing {k:?}")))
                                .and_then(|x| rat(x, &format!("terms[{i}].{k}")))
                        };
                        Ok(SigmoidTerm {
                            weight: field("weight")?,
                            shift: field("shift")?,
                            steepness: field("steepness")?,
                        })
                    })
                    .collect::<Result<Vec<_>, TaylorError>>()?;
                if terms.iter().any(|t| !t.steepness.is_positive()) {
                    return Err(TaylorError::Invalid("steepness must be positive".into()));
                }
                AnalyticMapSpec::SigmoidSum { base, terms }
            }
            other => return Err(TaylorError::Invalid(format!("unknown map type {other:?}"))),
        };
        Ok(spec)
    }

    pub fn to_json(&self) -> Value {
        match self {
            AnalyticMapSpec::Polynomial(c) => json!({
                "type": "polynomial",
                "coeffs": c.iter().map(rat_to_string).collect::<Vec<_>>(),
            }),
            AnalyticMapSpec::SigmoidSum { base, terms } => json!({
                "type": "sigmoid_sum",
                "base": rat_to_string(base),
                "terms": terms.iter().map(|t| json!({
                    "weight": rat_to_string(&t.weight),
                    "shift": rat_to_string(&t.shift),
                    "steepness": rat_to_string(&t.steepness),
                })).collect::<Vec<_>>(),
            }),
            AnalyticMapSpec::BlackBox(b) => json!({"type": "black_box", "name": b.name}),
        }
    }

    /// `lambda x (1 - x)`.
    pub fn logistic(lambda: BigRational) -> Self {
        AnalyticMapSpec::Polynomial(vec![BigRational::zero(), lambda.clone(), -lambda])
    }

    pub fn constant(c: BigRational) -> Self {
        AnalyticMapSpec::Polynomial(vec![c])
    }

    pub fn identity() -> Self {
        AnalyticMapSpec::Polynomial(vec![BigRational::zero(), BigRational::one()])
    }

    pub fn polynomial_coeffs(&self) -> Option<&[BigRational]> {
        match self {
            AnalyticMapSpec::Polynomial(c) => Some(c),
            _ => None,
        }
    }

    pub fn eval(&self, x: &PrecisionReal, bits: u32) -> PrecisionReal {
        match self {
            AnalyticMapSpec::Polynomial(c) => {
                let w = bits + 8;
                let cs: Vec<PrecisionReal> = c.iter().map(|r| PrecisionReal::from_ratio(r, w)).collect();
                poly_eval(&cs, x, w).with_bits(bits)
            }
            AnalyticMapSpec::SigmoidSum { base, terms } => {
                let w = bits + 16;
                let mut acc = PrecisionReal::from_ratio(base, w);
                for t in terms {
                    let z = (x - &PrecisionReal::from_ratio(&t.shift, w))
                        .mul_to(&PrecisionReal::from_ratio(&t.steepness, w), w);
                    acc = &acc + &logistic(&z, w).mul_to(&PrecisionReal::from_ratio(&t.weight, w), w);
                }
                acc.with_bits(bits)
            }
            AnalyticMapSpec::BlackBox(b) => (b.eval)(x, bits),
        }
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        match self {
            AnalyticMapSpec::Polynomial(c) => {
                poly_eval_f64(&c.iter().map(rat_f64).collect::<Vec<_>>(), x)
            }
            AnalyticMapSpec::SigmoidSum { base, terms } => {
                rat_f64(base)
                    + terms
                        .iter()
                        .map(|t| {
                            let z = rat_f64(&t.steepness) * (x - rat_f64(&t.shift));
                            rat_f64(&t.weight) / (1.0 + (-z).exp())
                        })
                        .sum::<f64>()
            }
            AnalyticMapSpec::BlackBox(b) => (b.eval)(&PrecisionReal::from_f64(x, 64), 64).to_f64(),
        }
    }

    /// Taylor bound `eta` with `|a_k(x)| <= eta^k` for `k >= 1` on [0, 1].
    pub fn eta(&self) -> f64 {
        match self {
            AnalyticMapSpec::Polynomial(c) => polynomial_eta(c),
            AnalyticMapSpec::SigmoidSum { terms, .. } => {
                let sum: f64 = terms
                    .iter()
                    .map(|t| rat_f64(&t.weight).abs() * rat_f64(&t.steepness))
                    .sum();
                let cmax = terms.iter().map(|t| rat_f64(&t.steepness)).fold(0.0, f64::max);
                sum.max(cmax).max(f64::MIN_POSITIVE)
            }
            AnalyticMapSpec::BlackBox(b) => b.eta,
        }
    }

    /// Taylor coefficients `a_0..a_degree` of `f` about `center`.
    ///
    /// Closed form for polynomials and sigmoid sums; black boxes go through
    /// finite differences with tolerance `2^-bits`.
    pub fn taylor_coeffs(
        &self,
        center: &PrecisionReal,
        degree: usize,
        bits: u32,
    ) -> Result<Vec<PrecisionReal>, TaylorError> {
        let w = bits + GUARD_BITS;
        let mut out = match self {
            AnalyticMapSpec::Polynomial(c) => {
                let cs: Vec<PrecisionReal> = c.iter().map(|r| PrecisionReal::from_ratio(r, w)).collect();
                poly_shift(&cs, &center.with_bits(w), w)
            }
            AnalyticMapSpec::SigmoidSum { base, terms } => {
                let mut acc = vec![PrecisionReal::zero(w); degree + 1];
                acc[0] = PrecisionReal::from_ratio(base, w);
                for t in terms {
                    let c = PrecisionReal::from_ratio(&t.steepness, w);
                    let wt = PrecisionReal::from_ratio(&t.weight, w);
                    let z0 = (center - &PrecisionReal::from_ratio(&t.shift, w)).mul_to(&c, w);
                    let b = logistic_series(&logistic(&z0, w), degree, w);
                    let mut ck = PrecisionReal::one(w);
                    for (k, bk) in b.iter().enumerate() {
                        acc[k] = &acc[k] + &bk.mul_to(&ck, w).mul_to(&wt, w);
                        ck = ck.mul_to(&c, w);
                    }
                }
                acc
            }
            AnalyticMapSpec::BlackBox(_) => {
                let delta = PrecisionReal::pow2(-(bits as i64), bits);
                (0..=degree)
                    .map(|k| super::series::finite_diff_coefficient(self, center, k, &delta))
                    .collect::<Result<_, _>>()?
            }
        };
        out.resize(degree + 1, PrecisionReal::zero(w));
        out.truncate(degree + 1);
        Ok(out.into_iter().map(|c| c.with_bits(bits)).collect())
    }

    /// Sample `f` on a `2^-12` grid and require values in [0, 1].
    pub fn check_range(&self) -> Result<(), TaylorError> {
        let steps = 1 << 12;
        let mut low = f64::INFINITY;
        for i in 0..=steps {
            let x = i as f64 / steps as f64;
            let v = self.eval_f64(x);
            if !(-1e-12..=1.0 + 1e-12).contains(&v) {
                return Err(TaylorError::Range { x, value: v });
            }
            low = low.min(v.min(1.0 - v));
        }
        let slack = self.eta() / (2.0 * steps as f64);
        if low < slack {
            log::debug!("map comes within {low:e} of the boundary; between-sample excursion up to {slack:e} not excluded");
        }
        Ok(())
    }
}

/// `max_k sup_{[0,1]} |a_k|^(1/k)` for a polynomial, with `a_k` sampled on a
/// grid and widened by the Lipschitz bound of `a_k` between samples.
fn polynomial_eta(c: &[BigRational]) -> f64 {
    let cs: Vec<f64> = c.iter().map(rat_f64).collect();
    let d = cs.len().saturating_sub(1);
    let grid = 1024;
    let h = 1.0 / grid as f64;
    let binom = |n: usize, k: usize| -> f64 { (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64) };
    // abs-coefficient majorant of a_k on [0, 1]
    let majorant = |k: usize| -> f64 { (k..=d).map(|j| binom(j, k) * cs[j].abs()).sum() };
    let mut eta = f64::MIN_POSITIVE;
    for k in 1..=d {
        let ak: Vec<f64> = (k..=d).map(|j| binom(j, k) * cs[j]).collect();
        let sup = (0..=grid)
            .map(|i| poly_eval_f64(&ak, i as f64 * h).abs())
            .fold(0.0, f64::max);
        let lip = if k < d { (k + 1) as f64 * majorant(k + 1) } else { 0.0 };
        let bound = sup + lip * h / 2.0;
        if bound > 0.0 {
            eta = eta.max(bound.powf(1.0 / k as f64));
        }
    }
    eta
}

/// Exact rational `p/q` from integers.
pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_variants() {
        let p = AnalyticMapSpec::from_json(&json!({"type": "polynomial", "coeffs": ["0.25", 0.5]})).unwrap();
        assert!((p.eval_f64(0.5) - 0.5).abs() < 1e-15);
        let l = AnalyticMapSpec::from_json(&json!({"type": "logistic", "lambda": "3.7"})).unwrap();
        assert!((l.eval_f64(0.5) - 0.925).abs() < 1e-15);
        let s = AnalyticMapSpec::from_json(&json!({"type": "sigmoid_sum", "base": "0.1",
            "terms": [{"weight": "0.5", "shift": "1/2", "steepness": 40}]}))
        .unwrap();
        assert!((s.eval_f64(0.5) - 0.35).abs() < 1e-15);
        let back = AnalyticMapSpec::from_json(&s.to_json()).unwrap();
        assert!((back.eval_f64(0.7) - s.eval_f64(0.7)).abs() < 1e-15);
        assert!(AnalyticMapSpec::from_json(&json!({"type": "cubic"})).is_err());
    }

    #[test]
    fn eta_per_variant() {
        assert!((AnalyticMapSpec::identity().eta() - 1.0).abs() < 1e-12);
        let l = AnalyticMapSpec::logistic(ratio(37, 10));
        assert!((l.eta() - 3.7).abs() < 0.02);
        assert!(l.check_range().is_ok());
        let bad = AnalyticMapSpec::Polynomial(vec![ratio(0, 1), ratio(2, 1)]);
        assert!(bad.check_range().is_err());
    }

    #[test]
    fn high_precision_sigmoid_matches_f64() {
        let s = AnalyticMapSpec::SigmoidSum {
            base: ratio(1, 10),
            terms: vec![SigmoidTerm { weight: ratio(1, 2), shift: ratio(3, 10), steepness: ratio(25, 1) }],
        };
        for x in [0.0, 0.2, 0.3, 0.9] {
            let hi = s.eval(&PrecisionReal::from_f64(x, 64), 128).to_f64();
            assert!((hi - s.eval_f64(x)).abs() < 1e-15);
        }
    }
}
