//! C interface to the tailbin estimators.
//!
//! Every fallible function returns a [`TbStatus`]; on failure the message is
//! kept per thread and read with [`tb_last_error`]. Fits are opaque handles
//! released with their `_free` function. Slices are passed as pointer plus
//! length and are only read during the call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tailbin::cs_model::{extreme_elasticity_cs, fit_cs_tail, predict_prob_cs, CrossSection, CsFit, CsMethod};
use tailbin::io::FitArtifact;
use tailbin::numerics::{cdf_abs_t, quantile_abs_t};
use tailbin::panel::{fit_panel_conditional, fit_panel_fe, forecast_unit, Correction, FeFit, PanelData, Transform};
use tailbin::tail_index::{hill_estimate, rank_half_estimate, TailIndexEstimate};
use tailbin::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TbStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// Malformed arguments or data.
    InvalidInput = 2,
    /// The data do not support an estimate.
    Estimation = 3,
    /// The output buffer is too small; the required length is reported.
    BufferTooSmall = 4,
    /// Internal failure caught at the boundary.
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TbMethod {
    Mle = 0,
    Hill = 1,
    RankHalf = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TbTransform {
    LogTail = 0,
    RawAll = 1,
    RawTail = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TbCorrection {
    None = 0,
    Jackknife = 1,
}

/// Cross-sectional tail fit.
pub struct TbCsFit(CsFit);

/// Fixed-effects panel fit.
pub struct TbFeFit(FeFit);

/// Accumulates panel rows before fitting.
pub struct TbPanelBuilder {
    dz: usize,
    rows: Vec<(String, i64, u8, f64, Vec<f64>)>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(e: Error) -> TbStatus {
    let status = if e.is_input_error() {
        TbStatus::InvalidInput
    } else {
        TbStatus::Estimation
    };
    set_error(e.to_string());
    status
}

fn guard<F: FnOnce() -> TbStatus>(f: F) -> TbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == TbStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => {
            set_error("internal panic");
            TbStatus::Panic
        }
    }
}

macro_rules! non_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            set_error(concat!("null pointer: ", stringify!($p)));
            return TbStatus::NullPointer;
        })+
    };
}

/// # Safety
/// `p` must be null or point to `n` readable values.
unsafe fn slice<'a, T>(p: *const T, n: usize) -> &'a [T] {
    if n == 0 || p.is_null() {
        &[]
    } else {
        std::slice::from_raw_parts(p, n)
    }
}

/// Copy the last error message of this thread into `buf` (NUL terminated)
/// and return the full message length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or writable for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn tb_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// `q` such that `P(|T| <= q) = p` for `T ~ t(df)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_quantile_abs_t(df: f64, p: f64, out: *mut f64) -> TbStatus {
    guard(|| {
        non_null!(out);
        match quantile_abs_t(df, p) {
            Ok(v) => {
                *out = v;
                TbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// `P(|T| <= q)` for `T ~ t(df)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_cdf_abs_t(df: f64, q: f64, out: *mut f64) -> TbStatus {
    guard(|| {
        non_null!(out);
        match cdf_abs_t(df, q) {
            Ok(v) => {
                *out = v;
                TbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

unsafe fn tail_index(
    f: fn(&[f64], f64) -> tailbin::Result<TailIndexEstimate>,
    xs: *const f64,
    n: usize,
    threshold: f64,
    alpha: *mut f64,
    se: *mut f64,
) -> TbStatus {
    guard(|| {
        non_null!(xs, alpha);
        match f(slice(xs, n), threshold) {
            Ok(est) => {
                *alpha = est.alpha_hat;
                if !se.is_null() {
                    *se = est.se;
                }
                TbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Hill estimate over `xs[i] >= threshold`; `se` may be null.
///
/// # Safety
/// `xs` must hold `n` values; `alpha` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_hill_estimate(
    xs: *const f64,
    n: usize,
    threshold: f64,
    alpha: *mut f64,
    se: *mut f64,
) -> TbStatus {
    tail_index(hill_estimate, xs, n, threshold, alpha, se)
}

/// Rank-1/2 log-log regression estimate; `se` may be null.
///
/// # Safety
/// As [`tb_hill_estimate`].
#[no_mangle]
pub unsafe extern "C" fn tb_rank_half_estimate(
    xs: *const f64,
    n: usize,
    threshold: f64,
    alpha: *mut f64,
    se: *mut f64,
) -> TbStatus {
    tail_index(rank_half_estimate, xs, n, threshold, alpha, se)
}

/// Fit the cross-sectional tail model. `z` is row-major `n x dz`; pass a
/// null `z` with `dz = 0` for a constant covariate.
///
/// # Safety
/// `y` and `x` must hold `n` values, `z` `n * dz` values, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tb_cs_fit(
    y: *const u8,
    x: *const f64,
    n: usize,
    z: *const f64,
    dz: usize,
    q: f64,
    method: TbMethod,
    out: *mut *mut TbCsFit,
) -> TbStatus {
    guard(|| {
        non_null!(y, x, out);
        let y = slice(y, n).to_vec();
        let x = slice(x, n).to_vec();
        let data = if dz == 0 {
            CrossSection::with_constant(y, x)
        } else {
            non_null!(z);
            CrossSection::new(y, x, slice(z, n * dz).to_vec(), dz)
        };
        let method = match method {
            TbMethod::Mle => CsMethod::Mle,
            TbMethod::Hill => CsMethod::Hill,
            TbMethod::RankHalf => CsMethod::RankHalf,
        };
        match data.and_then(|d| fit_cs_tail(&d, q, method)) {
            Ok(fit) => {
                *out = Box::into_raw(Box::new(TbCsFit(fit)));
                TbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of covariates of a fit.
///
/// # Safety
/// `fit` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn tb_cs_fit_dz(fit: *const TbCsFit) -> usize {
    fit.as_ref().map(|f| f.0.dz()).unwrap_or(0)
}

/// Copy `theta^(y)` into `out[..len]`; `len` must be at least `dz`.
///
/// # Safety
/// `fit` must be live; `out` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn tb_cs_fit_theta(fit: *const TbCsFit, y: u8, out: *mut f64, len: usize) -> TbStatus {
    guard(|| {
        non_null!(fit, out);
        if y > 1 {
            set_error("y must be 0 or 1");
            return TbStatus::InvalidInput;
        }
        let theta = (*fit).0.theta(y);
        if len < theta.len() {
            set_error(format!("buffer holds {len} values, need {}", theta.len()));
            return TbStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(theta.as_ptr(), out, theta.len());
        TbStatus::Ok
    })
}

/// Plug-in `P(Y = 1 | X = x, Z = z)`.
///
/// # Safety
/// `fit` must be live, `z` hold `dz` values, `p` writable.
#[no_mangle]
pub unsafe extern "C" fn tb_cs_fit_predict(
    fit: *const TbCsFit,
    x: f64,
    z: *const f64,
    dz: usize,
    p: *mut f64,
) -> TbStatus {
    guard(|| {
        non_null!(fit, z, p);
        match predict_prob_cs(&(*fit).0, x, slice(z, dz)) {
            Ok(v) => {
                *p = v;
                TbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Limit elasticity `-|alpha_1(z) - alpha_0(z)|` and its standard error;
/// `se` may be null.
///
/// # Safety
/// `fit` must be live, `z` hold `dz` values, `value` writable.
#[no_mangle]
pub unsafe extern "C" fn tb_cs_fit_elasticity(
    fit: *const TbCsFit,
    z: *const f64,
    dz: usize,
    value: *mut f64,
    se: *mut f64,
) -> TbStatus {
    guard(|| {
        non_null!(fit, z, value);
        match extreme_elasticity_cs(&(*fit).0, slice(z, dz)) {
            Ok(e) => {
                *value = e.value;
                if !se.is_null() {
                    *se = e.se;
                }
                TbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// JSON artifact of a fit; release with [`tb_string_free`]. Null on error.
///
/// # Safety
/// `fit` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn tb_cs_fit_to_json(fit: *const TbCsFit) -> *mut c_char {
    let Some(f) = fit.as_ref() else {
        set_error("null pointer: fit");
        return ptr::null_mut();
    };
    match FitArtifact::from_cs(&f.0).to_json() {
        Ok(s) => CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut()),
        Err(e) => {
            fail(e);
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `fit` must come from [`tb_cs_fit`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tb_cs_fit_free(fit: *mut TbCsFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// New empty panel with `dz` covariates per row (0 for a constant).
#[no_mangle]
pub extern "C" fn tb_panel_builder_new(dz: usize) -> *mut TbPanelBuilder {
    Box::into_raw(Box::new(TbPanelBuilder { dz, rows: Vec::new() }))
}

/// Append one `(unit, t, y, x, z)` row; `z` may be null when `dz = 0`.
///
/// # Safety
/// `b` must be live, `unit` a NUL-terminated UTF-8 string, `z` hold `dz`
/// values.
#[no_mangle]
pub unsafe extern "C" fn tb_panel_builder_push(
    b: *mut TbPanelBuilder,
    unit: *const c_char,
    t: i64,
    y: u8,
    x: f64,
    z: *const f64,
) -> TbStatus {
    guard(|| {
        non_null!(b, unit);
        let b = &mut *b;
        let Ok(id) = CStr::from_ptr(unit).to_str() else {
            set_error("unit id is not valid UTF-8");
            return TbStatus::InvalidInput;
        };
        if y > 1 {
            set_error("y must be 0 or 1");
            return TbStatus::InvalidInput;
        }
        let zs = if b.dz == 0 {
            vec![1.0]
        } else {
            non_null!(z);
            slice(z, b.dz).to_vec()
        };
        b.rows.push((id.to_string(), t, y, x, zs));
        TbStatus::Ok
    })
}

/// # Safety
/// `b` must come from [`tb_panel_builder_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tb_panel_builder_free(b: *mut TbPanelBuilder) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

fn build(b: &TbPanelBuilder) -> tailbin::Result<PanelData> {
    PanelData::from_rows(b.rows.iter().cloned(), b.dz.max(1))
}

/// Small-`T` conditional MLE; writes `theta*` and its standard errors
/// (`se` may be null) into buffers of at least `dz` values.
///
/// # Safety
/// `b` must be live; `theta` (and `se` if non-null) writable for `len`.
#[no_mangle]
pub unsafe extern "C" fn tb_panel_conditional_fit(
    b: *const TbPanelBuilder,
    q: f64,
    theta: *mut f64,
    se: *mut f64,
    len: usize,
) -> TbStatus {
    guard(|| {
        non_null!(b, theta);
        match build(&*b).and_then(|p| fit_panel_conditional(&p, q)) {
            Ok(fit) => {
                let d = fit.theta_star.len();
                if len < d {
                    set_error(format!("buffer holds {len} values, need {d}"));
                    return TbStatus::BufferTooSmall;
                }
                ptr::copy_nonoverlapping(fit.theta_star.as_ptr(), theta, d);
                if !se.is_null() {
                    for j in 0..d {
                        *se.add(j) = fit.cov[(j, j)].max(0.0).sqrt();
                    }
                }
                TbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Fixed-effects fit with unit intercepts.
///
/// # Safety
/// `b` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tb_panel_fe_fit(
    b: *const TbPanelBuilder,
    q: f64,
    transform: TbTransform,
    correction: TbCorrection,
    out: *mut *mut TbFeFit,
) -> TbStatus {
    guard(|| {
        non_null!(b, out);
        let transform = match transform {
            TbTransform::LogTail => Transform::LogTail,
            TbTransform::RawAll => Transform::RawAll,
            TbTransform::RawTail => Transform::RawTail,
        };
        let correction = match correction {
            TbCorrection::None => Correction::None,
            TbCorrection::Jackknife => Correction::Jackknife,
        };
        match build(&*b).and_then(|p| fit_panel_fe(&p, q, transform, correction)) {
            Ok(fit) => {
                *out = Box::into_raw(Box::new(TbFeFit(fit)));
                TbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Copy `theta*` into `out[..len]`.
///
/// # Safety
/// `fit` must be live; `out` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn tb_fe_fit_theta(fit: *const TbFeFit, out: *mut f64, len: usize) -> TbStatus {
    guard(|| {
        non_null!(fit, out);
        let theta = &(*fit).0.theta_star;
        if len < theta.len() {
            set_error(format!("buffer holds {len} values, need {}", theta.len()));
            return TbStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(theta.as_ptr(), out, theta.len());
        TbStatus::Ok
    })
}

/// Number of units with an estimated intercept.
///
/// # Safety
/// `fit` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn tb_fe_fit_n_units(fit: *const TbFeFit) -> usize {
    fit.as_ref().map(|f| f.0.a_tilde.len()).unwrap_or(0)
}

/// Forecast probability for a retained unit at a new `x`.
///
/// # Safety
/// `fit` must be live, `unit` NUL-terminated, `z` hold `dz` values, `p`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn tb_fe_fit_forecast(
    fit: *const TbFeFit,
    unit: *const c_char,
    x: f64,
    z: *const f64,
    dz: usize,
    p: *mut f64,
) -> TbStatus {
    guard(|| {
        non_null!(fit, unit, z, p);
        let Ok(id) = CStr::from_ptr(unit).to_str() else {
            set_error("unit id is not valid UTF-8");
            return TbStatus::InvalidInput;
        };
        match forecast_unit(&(*fit).0, id, x, slice(z, dz)) {
            Ok(v) => {
                *p = v;
                TbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// JSON artifact of a fit; release with [`tb_string_free`]. Null on error.
///
/// # Safety
/// `fit` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn tb_fe_fit_to_json(fit: *const TbFeFit) -> *mut c_char {
    let Some(f) = fit.as_ref() else {
        set_error("null pointer: fit");
        return ptr::null_mut();
    };
    match FitArtifact::from_fe(&f.0).to_json() {
        Ok(s) => CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut()),
        Err(e) => {
            fail(e);
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `fit` must come from [`tb_panel_fe_fit`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tb_fe_fit_free(fit: *mut TbFeFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}
