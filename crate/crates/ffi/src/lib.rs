//! C ABI for the crest toolkit.
//!
//! Conventions: opaque handles created and freed by this library, status
//! codes on every fallible call, results through out-pointers. A readable
//! message for the most recent failure on the calling thread is available
//! via [`crest_last_error`]. The header `include/crest.h` is generated by
//! cbindgen at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::sync::Arc;

use crest_core::config::parse_field_spec;
use crest_core::extremum::{find_max, MaximizerOptions};
use crest_core::field::{sample_field, FieldSample, FieldSpec};
use crest_core::laplace::{integral_i, pathwise_ratio};
use crest_core::orlicz::{young_fenchel, PhiFunction};
use crest_core::quadrature::QuadratureOptions;
use crest_core::tail::AsymptoticParams;
use crest_core::Error;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrestStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    OutOfDomain = 5,
    NoConvergence = 6,
    DegenerateMaximum = 7,
    QuadratureNotConverged = 8,
    Unreliable = 9,
    RangeError = 10,
    Internal = 11,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> CrestStatus {
    match err {
        Error::Config(_) | Error::InvalidSpec(_) => CrestStatus::ParseError,
        Error::InvalidInput(_) | Error::NonGaussianSpec => CrestStatus::InvalidArgument,
        Error::OutOfDomain(_) => CrestStatus::OutOfDomain,
        Error::NoConvergence => CrestStatus::NoConvergence,
        Error::DegenerateMaximum => CrestStatus::DegenerateMaximum,
        Error::QuadratureNotConverged { .. } => CrestStatus::QuadratureNotConverged,
        Error::EssTooSmall { .. } | Error::MgfUnstable | Error::NotCentered { .. } => {
            CrestStatus::Unreliable
        }
        Error::RExceedsRange(_) | Error::GridTooLarge(_) => CrestStatus::RangeError,
        _ => CrestStatus::Internal,
    }
}

fn fail(err: Error) -> CrestStatus {
    set_error(&err.to_string());
    status_of(&err)
}

/// Opaque handle to a field law (domain, mean, basis, seed).
pub struct CrestFieldSpec {
    inner: Arc<FieldSpec>,
}

/// Opaque handle to one realized sample path.
pub struct CrestSample {
    inner: FieldSample,
}

/// Generator families exposed over the C ABI.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrestPhiKind {
    /// `λ²/2` (the `p` argument is ignored).
    Gaussian = 0,
    /// `λ²` on `|λ| ≤ 1`, `|λ|^p` beyond.
    Power = 1,
    /// `|λ|^p / p`.
    PurePower = 2,
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn crest_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing crest call on the same thread.
#[no_mangle]
pub extern "C" fn crest_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parse a field-spec TOML document (`domain`, optional `mean`, `terms`
/// array) and return an owned handle.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer;
/// the returned handle must be released with [`crest_field_spec_free`].
#[no_mangle]
pub unsafe extern "C" fn crest_field_spec_parse(
    text: *const c_char,
    seed: u64,
    out: *mut *mut CrestFieldSpec,
) -> CrestStatus {
    if text.is_null() || out.is_null() {
        set_error("null argument");
        return CrestStatus::NullArgument;
    }
    let text = match CStr::from_ptr(text).to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("config text is not valid UTF-8");
            return CrestStatus::InvalidUtf8;
        }
    };
    match parse_field_spec(text, seed) {
        Ok(spec) => {
            *out = Box::into_raw(Box::new(CrestFieldSpec { inner: spec }));
            CrestStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Release a field-spec handle (NULL is a no-op).
///
/// # Safety
/// `spec` must be NULL or a pointer returned by [`crest_field_spec_parse`]
/// that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn crest_field_spec_free(spec: *mut CrestFieldSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Domain dimension of a spec; 0 for NULL.
///
/// # Safety
/// `spec` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn crest_field_spec_dim(spec: *const CrestFieldSpec) -> usize {
    if spec.is_null() {
        return 0;
    }
    (*spec).inner.dim()
}

/// Draw the coefficients of `replicate_id` into a new sample handle.
///
/// # Safety
/// `spec` must be a live handle and `out` a valid pointer; the returned
/// handle must be released with [`crest_sample_free`].
#[no_mangle]
pub unsafe extern "C" fn crest_sample_create(
    spec: *const CrestFieldSpec,
    replicate_id: u64,
    out: *mut *mut CrestSample,
) -> CrestStatus {
    if spec.is_null() || out.is_null() {
        set_error("null argument");
        return CrestStatus::NullArgument;
    }
    let sample = sample_field(&(*spec).inner, replicate_id);
    *out = Box::into_raw(Box::new(CrestSample { inner: sample }));
    CrestStatus::Ok
}

/// Release a sample handle (NULL is a no-op).
///
/// # Safety
/// `sample` must be NULL or a pointer returned by [`crest_sample_create`]
/// that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn crest_sample_free(sample: *mut CrestSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

unsafe fn point_of<'a>(
    sample: *const CrestSample,
    x: *const f64,
    dim: usize,
) -> Result<(&'a FieldSample, &'a [f64]), CrestStatus> {
    if sample.is_null() || x.is_null() {
        set_error("null argument");
        return Err(CrestStatus::NullArgument);
    }
    let s = &(*sample).inner;
    if dim != s.dim() {
        set_error("dimension mismatch");
        return Err(CrestStatus::InvalidArgument);
    }
    Ok((s, std::slice::from_raw_parts(x, dim)))
}

/// Evaluate `ξ(x)`.
///
/// # Safety
/// `sample` must be a live handle, `x` must point to `dim` doubles, and
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crest_eval(
    sample: *const CrestSample,
    x: *const f64,
    dim: usize,
    out: *mut f64,
) -> CrestStatus {
    let (s, x) = match point_of(sample, x, dim) {
        Ok(v) => v,
        Err(st) => return st,
    };
    if out.is_null() {
        set_error("null out pointer");
        return CrestStatus::NullArgument;
    }
    match s.value(x) {
        Ok(v) => {
            *out = v;
            CrestStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Analytic gradient into `out[0..dim]`.
///
/// # Safety
/// As [`crest_eval`]; `out` must point to `dim` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn crest_gradient(
    sample: *const CrestSample,
    x: *const f64,
    dim: usize,
    out: *mut f64,
) -> CrestStatus {
    let (s, x) = match point_of(sample, x, dim) {
        Ok(v) => v,
        Err(st) => return st,
    };
    if out.is_null() {
        set_error("null out pointer");
        return CrestStatus::NullArgument;
    }
    match s.gradient(x) {
        Ok(g) => {
            std::ptr::copy_nonoverlapping(g.as_ptr(), out, dim);
            CrestStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Analytic Hessian into `out[0..dim*dim]`, row-major.
///
/// # Safety
/// As [`crest_eval`]; `out` must point to `dim * dim` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn crest_hessian(
    sample: *const CrestSample,
    x: *const f64,
    dim: usize,
    out: *mut f64,
) -> CrestStatus {
    let (s, x) = match point_of(sample, x, dim) {
        Ok(v) => v,
        Err(st) => return st,
    };
    if out.is_null() {
        set_error("null out pointer");
        return CrestStatus::NullArgument;
    }
    match s.hessian(x) {
        Ok(h) => {
            for i in 0..dim {
                for j in 0..dim {
                    *out.add(i * dim + j) = h[(i, j)];
                }
            }
            CrestStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// `ζ(x) = |det η(x)|^{1/2}`.
///
/// # Safety
/// As [`crest_eval`].
#[no_mangle]
pub unsafe extern "C" fn crest_zeta(
    sample: *const CrestSample,
    x: *const f64,
    dim: usize,
    out: *mut f64,
) -> CrestStatus {
    let (s, x) = match point_of(sample, x, dim) {
        Ok(v) => v,
        Err(st) => return st,
    };
    if out.is_null() {
        set_error("null out pointer");
        return CrestStatus::NullArgument;
    }
    match s.zeta(x) {
        Ok(z) => {
            *out = z;
            CrestStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Multistart maximization with default options. Writes the maximum value,
/// the argmax (length `dim`), whether it is interior, and `|det η(x0)|`.
///
/// # Safety
/// `sample` must be a live handle; `out_argmax` must point to `dim`
/// writable doubles; the scalar out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn crest_find_max(
    sample: *const CrestSample,
    out_value: *mut f64,
    out_argmax: *mut f64,
    dim: usize,
    out_interior: *mut bool,
    out_abs_det: *mut f64,
) -> CrestStatus {
    if sample.is_null()
        || out_value.is_null()
        || out_argmax.is_null()
        || out_interior.is_null()
        || out_abs_det.is_null()
    {
        set_error("null argument");
        return CrestStatus::NullArgument;
    }
    let s = &(*sample).inner;
    if dim != s.dim() {
        set_error("dimension mismatch");
        return CrestStatus::InvalidArgument;
    }
    match find_max(s, &MaximizerOptions::default()) {
        Ok(r) => {
            *out_value = r.value;
            std::ptr::copy_nonoverlapping(r.argmax.as_ptr(), out_argmax, dim);
            *out_interior = r.interior;
            *out_abs_det = r.hessian.determinant().abs();
            CrestStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// `ln I(λ)` of the Hessian-weighted Laplace integral (`-inf` when the
/// integrand vanishes identically).
///
/// # Safety
/// `sample` must be a live handle and `out_log` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crest_log_integral(
    sample: *const CrestSample,
    lambda: f64,
    out_log: *mut f64,
) -> CrestStatus {
    if sample.is_null() || out_log.is_null() {
        set_error("null argument");
        return CrestStatus::NullArgument;
    }
    match integral_i(&(*sample).inner, lambda, &QuadratureOptions::default()) {
        Ok(est) => {
            *out_log = est.value.ln();
            CrestStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Pathwise ratio `I(λ) / ((2π/λ)^{d/2} e^{λM})` with default options.
///
/// # Safety
/// `sample` must be a live handle and `out_ratio` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crest_pathwise_ratio(
    sample: *const CrestSample,
    lambda: f64,
    out_ratio: *mut f64,
) -> CrestStatus {
    if sample.is_null() || out_ratio.is_null() {
        set_error("null argument");
        return CrestStatus::NullArgument;
    }
    match pathwise_ratio(
        &(*sample).inner,
        lambda,
        &MaximizerOptions::default(),
        &QuadratureOptions::default(),
    ) {
        Ok(r) => {
            *out_ratio = r;
            CrestStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Young–Fenchel conjugate `φ*(u)` of a built-in generator.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crest_young_fenchel(
    kind: CrestPhiKind,
    p: f64,
    u: f64,
    out: *mut f64,
) -> CrestStatus {
    if out.is_null() {
        set_error("null out pointer");
        return CrestStatus::NullArgument;
    }
    let phi = match kind {
        CrestPhiKind::Gaussian => Ok(PhiFunction::Gaussian),
        CrestPhiKind::Power => PhiFunction::power_p(p),
        CrestPhiKind::PurePower => PhiFunction::pure_power(p),
    };
    match phi {
        Ok(phi) => {
            *out = young_fenchel(&phi, u);
            CrestStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// `ln T(u)` of the predicted tail for transform growth `C λ^α e^{λ^q/q}`.
///
/// # Safety
/// `out_log` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crest_tail_prediction_log(
    alpha: f64,
    c_r: f64,
    q: f64,
    u: f64,
    out_log: *mut f64,
) -> CrestStatus {
    if out_log.is_null() {
        set_error("null out pointer");
        return CrestStatus::NullArgument;
    }
    if !(u > 0.0) {
        set_error("u must be positive");
        return CrestStatus::InvalidArgument;
    }
    match AsymptoticParams::new(alpha, c_r, q) {
        Ok(params) => {
            let lt = -0.5 * (std::f64::consts::TAU).ln() + params.c_r.ln() + params.gamma * u.ln()
                - u.powf(params.p) / params.p;
            *out_log = lt.min(0.0);
            CrestStatus::Ok
        }
        Err(e) => fail(e),
    }
}
