//! C ABI for `noisy-dynamics`.
//!
//! Objects cross the boundary as opaque handles created by `nd_*_new` or
//! `nd_*_from_*` and released with the matching `nd_*_free`. Every fallible
//! call returns an [`NdStatus`]; on failure [`nd_last_error`] describes the
//! problem. Panics are caught and reported as `ND_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_bigint::BigUint;
use noisy_dynamics::kernel::{GaussianKernel, NoisySystem};
use noisy_dynamics::matpow::io::{matrix_to_json, parse_matrix};
use noisy_dynamics::matpow::{matrix_power, SquareMatrix};
use noisy_dynamics::numerics::{PowerResult, PrecisionReal};
use noisy_dynamics::taylor::{AnalyticMapSpec, PiecewiseTaylorDensity};
use noisy_dynamics::tmembed::{decide_by_measure, DecideOptions, EmbedOptions, TuringMachine, VariantKind, Verdict};
use noisy_dynamics::transfer::{invariant_measure, measure_weight, InvariantOptions, Method, TransferError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Overflow = 3,
    SolverFailure = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NdMethod {
    Power = 0,
    Eigen = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NdVariant {
    Piecewise = 0,
    Sigmoid = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NdVerdict {
    Accept = 0,
    Reject = 1,
    Indeterminate = 3,
}

/// Square fixed-point matrix.
pub struct NdMatrix(SquareMatrix);

/// A map of [0, 1] with Gaussian noise.
pub struct NdSystem(NoisySystem);

/// Piecewise-polynomial density on [0, 1].
pub struct NdDensity(PiecewiseTaylorDensity);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

type Outcome = Result<(), (NdStatus, String)>;

fn guard(f: impl FnOnce() -> Outcome) -> NdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NdStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            NdStatus::Panic
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> (NdStatus, String) {
    (NdStatus::InvalidInput, e.to_string())
}

fn null(what: &str) -> (NdStatus, String) {
    (NdStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (NdStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (NdStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn in_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, (NdStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread. Valid until the next
/// failing call on the same thread; never NULL.
#[no_mangle]
pub extern "C" fn nd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must come from this library (or be NULL) and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Build an `n`×`n` matrix from `n*n` row-major doubles, stored at `bits`.
///
/// # Safety
/// `entries` must point to `n*n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nd_matrix_new(n: usize, entries: *const f64, bits: u32, out: *mut *mut NdMatrix) -> NdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if entries.is_null() {
            return Err(null("entries"));
        }
        if n == 0 || bits == 0 {
            return Err(invalid("n and bits must be positive"));
        }
        let vals = std::slice::from_raw_parts(entries, n * n);
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(invalid("entries must be finite"));
        }
        *out = Box::into_raw(Box::new(NdMatrix(SquareMatrix::from_f64(n, vals, bits))));
        Ok(())
    })
}

/// Parse the JSON matrix format `{"n", "precision_bits", "entries"}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nd_matrix_from_json(json: *const c_char, out: *mut *mut NdMatrix) -> NdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let m = parse_matrix(str_arg(json, "json")?).map_err(invalid)?;
        *out = Box::into_raw(Box::new(NdMatrix(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must come from this library (or be NULL) and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nd_matrix_free(m: *mut NdMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Dimension of `m`, or 0 for NULL.
///
/// # Safety
/// `m` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn nd_matrix_dim(m: *const NdMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.n())
}

/// Entry `(i, j)` rounded to double.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nd_matrix_get(m: *const NdMatrix, i: usize, j: usize, out: *mut f64) -> NdStatus {
    guard(|| {
        let m = in_arg(m, "m")?;
        let out = out_arg(out, "out")?;
        if i >= m.0.n() || j >= m.0.n() {
            return Err(invalid(format!("index ({i}, {j}) out of range")));
        }
        *out = m.0.get(i, j).to_f64();
        Ok(())
    })
}

/// JSON text of `m` with exact decimal entries; free with [`nd_string_free`].
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nd_matrix_to_json(m: *const NdMatrix, out: *mut *mut c_char) -> NdStatus {
    guard(|| {
        let m = in_arg(m, "m")?;
        let out = out_arg(out, "out")?;
        *out = CString::new(matrix_to_json(&m.0)).expect("JSON has no NULs").into_raw();
        Ok(())
    })
}

/// `m^E` within `2^-bits` for a decimal exponent `E`. Returns
/// `ND_STATUS_OVERFLOW` (and leaves `out` untouched) when the result would
/// exceed `2^bound_log2` in norm.
///
/// # Safety
/// `m` must be a live handle, `exponent` a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nd_matrix_power(
    m: *const NdMatrix,
    exponent: *const c_char,
    bits: u32,
    bound_log2: i64,
    out: *mut *mut NdMatrix,
) -> NdStatus {
    guard(|| {
        let m = in_arg(m, "m")?;
        let out = out_arg(out, "out")?;
        let e: BigUint = str_arg(exponent, "exponent")?
            .trim()
            .parse()
            .map_err(|_| invalid("exponent must be a non-negative decimal integer"))?;
        let bound = PrecisionReal::pow2(bound_log2, 64);
        match matrix_power(&m.0, &e, bits, &bound).map_err(|e| (NdStatus::SolverFailure, e.to_string()))? {
            PowerResult::Value(v) => {
                *out = Box::into_raw(Box::new(NdMatrix(v)));
                Ok(())
            }
            PowerResult::Overflow(o) => Err((
                NdStatus::Overflow,
                format!("norm exceeds the bound (log estimate {})", o.log_norm_estimate.to_f64()),
            )),
        }
    })
}

/// A noisy system from map JSON (`polynomial`, `sigmoid_sum` or `logistic`)
/// and noise level `eps`, evaluated at `bits`.
///
/// # Safety
/// `map_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nd_system_new(map_json: *const c_char, eps: f64, bits: u32, out: *mut *mut NdSystem) -> NdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let v: serde_json::Value = serde_json::from_str(str_arg(map_json, "map_json")?).map_err(invalid)?;
        let map = AnalyticMapSpec::from_json(&v).map_err(invalid)?;
        let kernel = GaussianKernel::from_f64(eps, bits).map_err(invalid)?;
        let sys = NoisySystem::new(map, kernel).map_err(invalid)?;
        *out = Box::into_raw(Box::new(NdSystem(sys)));
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library (or be NULL) and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nd_system_free(s: *mut NdSystem) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Invariant density of `sys` to accuracy `delta` with default constants.
///
/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nd_invariant_measure(
    sys: *const NdSystem,
    delta: f64,
    method: NdMethod,
    out: *mut *mut NdDensity,
) -> NdStatus {
    guard(|| {
        let sys = in_arg(sys, "sys")?;
        let out = out_arg(out, "out")?;
        let opts = InvariantOptions {
            method: match method {
                NdMethod::Power => Method::Power,
                NdMethod::Eigen => Method::Eigen,
            },
            ..Default::default()
        };
        let sol = invariant_measure(&sys.0, delta, &opts).map_err(|e| match e {
            TransferError::Invalid(_) => invalid(e),
            TransferError::Overflow { .. } => (NdStatus::Overflow, e.to_string()),
            _ => (NdStatus::SolverFailure, e.to_string()),
        })?;
        *out = Box::into_raw(Box::new(NdDensity(sol.density)));
        Ok(())
    })
}

/// # Safety
/// `d` must come from this library (or be NULL) and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nd_density_free(d: *mut NdDensity) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Density value at `x` in [0, 1].
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nd_density_eval(d: *const NdDensity, x: f64, out: *mut f64) -> NdStatus {
    guard(|| {
        let d = in_arg(d, "d")?;
        let out = out_arg(out, "out")?;
        if !(0.0..=1.0).contains(&x) {
            return Err(invalid("x must lie in [0, 1]"));
        }
        *out = d.0.eval_f64(x);
        Ok(())
    })
}

/// Mass of the density on `[a, b]`.
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nd_density_weight(d: *const NdDensity, a: f64, b: f64, out: *mut f64) -> NdStatus {
    guard(|| {
        let d = in_arg(d, "d")?;
        let out = out_arg(out, "out")?;
        if !(0.0 <= a && a <= b && b <= 1.0) {
            return Err(invalid("need 0 <= a <= b <= 1"));
        }
        *out = measure_weight(&d.0, &PrecisionReal::from_f64(a, 96), &PrecisionReal::from_f64(b, 96)).to_f64();
        Ok(())
    })
}

/// Decide a Turing machine (JSON) from the invariant measure of its
/// embedding. `weight` receives the mass on [1/2, 1] and may be NULL.
///
/// # Safety
/// `tm_json` must be a NUL-terminated string; `verdict` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nd_decide(
    tm_json: *const c_char,
    variant: NdVariant,
    verdict: *mut NdVerdict,
    weight: *mut f64,
) -> NdStatus {
    guard(|| {
        let verdict = out_arg(verdict, "verdict")?;
        let v: serde_json::Value = serde_json::from_str(str_arg(tm_json, "tm_json")?).map_err(invalid)?;
        let tm = TuringMachine::from_json(&v).map_err(invalid)?;
        let opts = DecideOptions {
            embed: EmbedOptions {
                variant: match variant {
                    NdVariant::Piecewise => VariantKind::Piecewise,
                    NdVariant::Sigmoid => VariantKind::Sigmoid,
                },
                ..Default::default()
            },
            ..Default::default()
        };
        let d = decide_by_measure(&tm, &opts).map_err(|e| (NdStatus::SolverFailure, e.to_string()))?;
        *verdict = match d.verdict {
            Verdict::Accept => NdVerdict::Accept,
            Verdict::Reject => NdVerdict::Reject,
            Verdict::Indeterminate => NdVerdict::Indeterminate,
        };
        if let Some(w) = weight.as_mut() {
            *w = d.weight;
        }
        Ok(())
    })
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn nd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn errors_are_reported() {
        let mut out = ptr::null_mut();
        let st = unsafe { nd_matrix_from_json(c"{\"n\": 1".as_ptr(), &mut out) };
        assert_eq!(st, NdStatus::InvalidInput);
        assert!(out.is_null());
        let msg = unsafe { CStr::from_ptr(nd_last_error()) }.to_str().unwrap();
        assert!(msg.contains("line"), "{msg}");
        let st = unsafe { nd_matrix_new(2, ptr::null(), 64, &mut out) };
        assert_eq!(st, NdStatus::NullPointer);
    }
}
