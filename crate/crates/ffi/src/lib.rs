//! C ABI for the `mcbc` bias-correction library.
//!
//! Every fallible function returns an [`McbcStatus`]; on failure a message is
//! available from [`mcbc_last_error_message`] on the same thread. Objects are
//! opaque handles released with their matching `*_free` function. Missing
//! rainfall values cross the boundary as NaN.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chrono::{Datelike, NaiveDate};
use serde::Deserialize;

use mcbc::config::CorrectionConfig;
use mcbc::params::{Method, ParamSet};
use mcbc::series::{DailySeries, PeriodScheme};
use mcbc::Error;

/// Result codes of the C API.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McbcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidSeries = 3,
    Parse = 4,
    InsufficientData = 5,
    NonConvergence = 6,
    Mismatch = 7,
    Panic = 8,
}

/// Daily rainfall series handle.
pub struct McbcSeries(DailySeries);

/// Calibrated correction parameters handle.
pub struct McbcParams(ParamSet);

/// Options accepted as JSON by [`mcbc_calibrate`] and [`mcbc_apply`].
/// Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct Options {
    #[serde(flatten)]
    correction: CorrectionConfig,
    scheme: PeriodScheme,
}

struct Failure(McbcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidSeries(_) | Error::NegativeRain { .. } | Error::NoOverlap => {
                McbcStatus::InvalidSeries
            }
            Error::Parse { .. } | Error::DuplicateDate { .. } => McbcStatus::Parse,
            Error::EmptySample | Error::FitInsufficientData { .. } | Error::Degenerate(_) => {
                McbcStatus::InsufficientData
            }
            Error::NonConvergence { .. } => McbcStatus::NonConvergence,
            Error::Mismatch(_) => McbcStatus::Mismatch,
            Error::InvalidScheme(_) | Error::InvalidConfig(_) | Error::Domain(_) | Error::Io(_) => {
                McbcStatus::InvalidArgument
            }
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(McbcStatus::InvalidArgument, msg.into())
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> McbcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            McbcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            McbcStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(McbcStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(McbcStatus::NullPointer, format!("{what} is null")))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(McbcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn options(json: *const c_char) -> Result<Options, Failure> {
    if json.is_null() {
        return Ok(Options::default());
    }
    let text = c_str(json, "options")?;
    let opts: Options = serde_json::from_str(text).map_err(|e| invalid(format!("options: {e}")))?;
    opts.correction.validate()?;
    Ok(opts)
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| invalid("string contains an interior NUL"))
}

/// Message of the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next API call on the same thread.
#[no_mangle]
pub extern "C" fn mcbc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mcbc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a series of `len` consecutive days starting on the given date.
/// NaN entries are missing values.
///
/// # Safety
/// `values` must point to `len` readable doubles (or be null when `len` is 0)
/// and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcbc_series_new(
    year: i32,
    month: u32,
    day: u32,
    values: *const f64,
    len: usize,
    out: *mut *mut McbcSeries,
) -> McbcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let start = NaiveDate::from_ymd_opt(year, month, day)
            .ok_or_else(|| invalid(format!("invalid date {year}-{month}-{day}")))?;
        let slice = if len == 0 {
            &[][..]
        } else if values.is_null() {
            return Err(Failure(McbcStatus::NullPointer, "values is null".into()));
        } else {
            std::slice::from_raw_parts(values, len)
        };
        let vals = slice.iter().map(|v| (!v.is_nan()).then_some(*v)).collect();
        *out = Box::into_raw(Box::new(McbcSeries(DailySeries::new(start, vals)?)));
        Ok(())
    })
}

/// Parses a `date,rain` CSV document.
///
/// # Safety
/// `csv` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcbc_series_from_csv(
    csv: *const c_char,
    out: *mut *mut McbcSeries,
) -> McbcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let series = mcbc::ingest::parse_station_csv(c_str(csv, "csv")?)?;
        *out = Box::into_raw(Box::new(McbcSeries(series)));
        Ok(())
    })
}

/// Number of days in the series; 0 for a null handle.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mcbc_series_len(series: *const McbcSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.len())
}

/// Writes the first day of the series.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mcbc_series_start(
    series: *const McbcSeries,
    year: *mut i32,
    month: *mut u32,
    day: *mut u32,
) -> McbcStatus {
    guard(|| {
        let s = deref(series, "series")?.0.start();
        *out_ptr(year, "year")? = s.year();
        *out_ptr(month, "month")? = s.month();
        *out_ptr(day, "day")? = s.day();
        Ok(())
    })
}

/// Copies the values into `buf`, which must hold exactly the series length.
/// Missing values are written as NaN.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mcbc_series_values(
    series: *const McbcSeries,
    buf: *mut f64,
    len: usize,
) -> McbcStatus {
    guard(|| {
        let s = &deref(series, "series")?.0;
        if len != s.len() {
            return Err(invalid(format!(
                "buffer holds {len} values, series has {}",
                s.len()
            )));
        }
        if len == 0 {
            return Ok(());
        }
        if buf.is_null() {
            return Err(Failure(McbcStatus::NullPointer, "buf is null".into()));
        }
        let dst = std::slice::from_raw_parts_mut(buf, len);
        for (d, v) in dst.iter_mut().zip(s.values()) {
            *d = v.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Releases a series handle. Null is ignored.
///
/// # Safety
/// `series` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mcbc_series_free(series: *mut McbcSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Calibrates `method` ("loci", "qm", "mc-loci" or "mc-qm") on paired
/// observations and model output. `options_json` may be null or a JSON object
/// with correction settings (`t_x`, `min_fit_n`, `calibration`, ...) and a
/// `scheme`.
///
/// # Safety
/// Handles must be live, strings NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mcbc_calibrate(
    method: *const c_char,
    obs: *const McbcSeries,
    model: *const McbcSeries,
    options_json: *const c_char,
    out: *mut *mut McbcParams,
) -> McbcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let method: Method = c_str(method, "method")?.parse()?;
        let obs = &deref(obs, "obs")?.0;
        let model = &deref(model, "model")?.0;
        let opts = options(options_json)?;
        let params = mcbc::params::calibrate(method, obs, model, &opts.scheme, &opts.correction)?;
        *out = Box::into_raw(Box::new(McbcParams(params)));
        Ok(())
    })
}

/// Applies calibrated parameters to a model series. `options_json` may carry
/// a `scheme`; it must be the one used during calibration.
///
/// # Safety
/// Handles must be live, `options_json` null or NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mcbc_apply(
    params: *const McbcParams,
    model: *const McbcSeries,
    options_json: *const c_char,
    out: *mut *mut McbcSeries,
) -> McbcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let params = &deref(params, "params")?.0;
        let model = &deref(model, "model")?.0;
        let opts = options(options_json)?;
        let corrected = params.apply(model, &opts.scheme)?;
        *out = Box::into_raw(Box::new(McbcSeries(corrected.series)));
        Ok(())
    })
}

/// Serialises parameters to JSON. Release the string with
/// [`mcbc_string_free`].
///
/// # Safety
/// `params` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mcbc_params_to_json(
    params: *const McbcParams,
    out: *mut *mut c_char,
) -> McbcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        *out = into_c_string(deref(params, "params")?.0.to_json()?)?;
        Ok(())
    })
}

/// Loads parameters previously written by [`mcbc_params_to_json`].
///
/// # Safety
/// `json` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mcbc_params_from_json(
    json: *const c_char,
    out: *mut *mut McbcParams,
) -> McbcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let params = ParamSet::from_json(c_str(json, "json")?)?;
        *out = Box::into_raw(Box::new(McbcParams(params)));
        Ok(())
    })
}

/// Method name of a parameter set as a static string; null for a null handle.
///
/// # Safety
/// `params` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn mcbc_params_method(params: *const McbcParams) -> *const c_char {
    let Some(p) = params.as_ref() else {
        return ptr::null();
    };
    match p.0.method() {
        Method::Loci => c"loci".as_ptr(),
        Method::Qm => c"qm".as_ptr(),
        Method::McLoci => c"mc-loci".as_ptr(),
        Method::McQm => c"mc-qm".as_ptr(),
    }
}

/// Releases a parameter handle. Null is ignored.
///
/// # Safety
/// `params` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mcbc_params_free(params: *mut McbcParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mcbc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
