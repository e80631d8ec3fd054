use crate::numerics::PrecisionReal;

use super::poly::{poly_integral, poly_mul, poly_pow};
use super::series::{truncate_series, SeriesSource};
use super::{AnalyticMapSpec, TaylorError};

/// `int_lo^hi (y - x_j)^m f(y)^k dy` within `delta`.
///
/// Expands `f` about `x_j`, truncates where the certified tail keeps
/// `|f^k - f_M^k|` small enough, raises the truncated series to the `k`-th
/// power exactly and integrates the resulting polynomial.
pub fn moment_integral(
    f: &AnalyticMapSpec,
    lo: &PrecisionReal,
    hi: &PrecisionReal,
    x_j: &PrecisionReal,
    m: u32,
    k: u32,
    delta: &PrecisionReal,
) -> Result<PrecisionReal, TaylorError> {
    let dlog = -delta.to_f64().log2();
    let bits = dlog.ceil().max(1.0) as u32 + 48;
    let eta = f.eta();
    let diam = (hi - lo).to_f64();
    let limit = 1.0 / (2.0 * eta);
    let exact_degree = f.polynomial_coeffs().map(|c| c.len() - 1);
    let r = (hi - x_j).abs().max((lo - x_j).abs());
    let rf = r.to_f64();
    // an off-centre x_j needs the interval symmetric about it to fit
    if exact_degree.is_none() && 2.0 * rf >= limit {
        return Err(TaylorError::Diameter { diam: 2.0 * rf, limit });
    }
    // |f^k - f_M^k| <= k T (1 + T)^(k-1) for |f| <= 1 and tail T
    let budget = delta.to_f64() / (2.0 * diam.max(1e-300) * rf.powi(m as i32).max(1e-300));
    let q = eta * rf;
    let mut deg = 0usize;
    loop {
        let t = q.powi(deg as i32 + 1) / (1.0 - q);
        if k as f64 * t * (1.0 + t).powi(k as i32 - 1) <= budget || exact_degree.is_some_and(|d| deg >= d) {
            break;
        }
        deg += 1;
        if deg > 4 * super::DEGREE_CAP {
            return Err(TaylorError::DegreeCap {
                needed: deg,
                cap: 4 * super::DEGREE_CAP,
            });
        }
    }
    let coeffs = f.taylor_coeffs(x_j, deg, bits)?;
    let coeff = |i: usize| coeffs[i].clone();
    let piece = truncate_series(
        &SeriesSource {
            center: x_j.with_bits(bits),
            radius: r.with_bits(bits),
            eta,
            exact_degree,
            coeff: &coeff,
        },
        deg,
    )?;
    let cap = (deg * k as usize).max(super::DEGREE_CAP);
    let fk = poly_pow(&piece.coeffs, k, bits, cap)?;
    let mut mono = vec![PrecisionReal::zero(bits); m as usize + 1];
    mono[m as usize] = PrecisionReal::one(bits);
    let integrand = poly_mul(&fk, &mono, bits);
    Ok(poly_integral(&integrand, &(lo - x_j), &(hi - x_j), bits))
}

#[cfg(test)]
mod tests {
    use super::super::map::ratio;
    use super::*;

    #[test]
    fn closed_forms() {
        let h = PrecisionReal::from_f64(0.375, 64);
        let z = PrecisionReal::zero(64);
        let d = PrecisionReal::pow2(-40, 64);
        let one = AnalyticMapSpec::constant(ratio(1, 1));
        let v = moment_integral(&one, &z, &h, &z, 1, 1, &d).unwrap();
        assert!((v.to_f64() - 0.375f64.powi(2) / 2.0).abs() < 1e-12);
        let id = AnalyticMapSpec::identity();
        let v = moment_integral(&id, &z, &h, &z, 0, 2, &d).unwrap();
        assert!((v.to_f64() - 0.375f64.powi(3) / 3.0).abs() < 1e-12);
    }
}
