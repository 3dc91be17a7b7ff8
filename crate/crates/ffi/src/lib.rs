//! C ABI over the `wdan` core.
//!
//! Every fallible entry point returns a [`WdanStatus`]. On failure the
//! message is stored per thread and read with [`wdan_last_error_message`].
//! Handles are opaque; each `*_new`/`*_load` has a matching `*_free`.
//! Panics never cross the boundary; they surface as `WDAN_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wdan::eval::adf_statistic;
use wdan::norm::{denormalize, normalize, DisentangledNorm, NormConfig};
use wdan::pipeline::{BundleRecord, ModelBundle, Pipeline};
use wdan::wavelet::Boundary;
use wdan::WdanError;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WdanStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Data = 4,
    Numeric = 5,
    Internal = 6,
    Panic = 7,
}

/// Wavelet normalizer bound to one configuration.
pub struct WdanNormalizer {
    norm: DisentangledNorm,
}

/// Trained forecaster with the preprocessing it was trained with.
pub struct WdanModel {
    bundle: ModelBundle,
    pipeline: Pipeline,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    // interior NULs would truncate the message; replace them
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &WdanError) -> WdanStatus {
    use WdanError::*;
    match e {
        Config { .. }
        | UnsupportedWavelet(_)
        | InvalidBasis { .. }
        | InvalidLevels
        | TooManyLevels { .. }
        | WindowTooShort { .. }
        | SignalTooShort { .. }
        | InvalidStrategy(_) => WdanStatus::Config,
        LengthMismatch { .. } | DimMismatch { .. } => WdanStatus::InvalidArgument,
        Parse { .. } | Schema(_) | DegenerateVariable { .. } | SeriesTooShort { .. } | NoData(_) | Io { .. } | Json(_) => {
            WdanStatus::Data
        }
        NumericFailure(_) | SingularRegression => WdanStatus::Numeric,
        _ => WdanStatus::Internal,
    }
}

struct Failure(WdanStatus, String);

impl From<WdanError> for Failure {
    fn from(e: WdanError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail(status: WdanStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, records any failure and converts panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WdanStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WdanStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            WdanStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(WdanStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(WdanStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(WdanStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(WdanStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(WdanStatus::NullPointer, format!("{what} handle is null")))
}

fn out_ptr<T>(out: *mut *mut T) -> Result<(), Failure> {
    if out.is_null() {
        Err(fail(WdanStatus::NullPointer, "output handle pointer is null"))
    } else {
        Ok(())
    }
}

/// Message of the last failure on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wdan_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn wdan_clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wdan_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a normalizer. `basis` names a wavelet such as "coif3";
/// `periodization` selects periodic instead of symmetric extension.
///
/// # Safety
/// `basis` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wdan_normalizer_new(
    basis: *const c_char,
    levels: usize,
    window_half_width: usize,
    epsilon: f64,
    periodization: bool,
    out: *mut *mut WdanNormalizer,
) -> WdanStatus {
    guard(|| {
        out_ptr(out)?;
        let cfg = NormConfig {
            window_half_width,
            epsilon,
            basis: c_str(basis, "basis")?.to_string(),
            levels,
            boundary: if periodization { Boundary::Periodization } else { Boundary::Symmetric },
        };
        let norm = DisentangledNorm::new(&cfg)?;
        *out = Box::into_raw(Box::new(WdanNormalizer { norm }));
        Ok(())
    })
}

/// # Safety
/// `h` must come from [`wdan_normalizer_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn wdan_normalizer_free(h: *mut WdanNormalizer) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Shortest window the normalizer accepts, or 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live normalizer.
#[no_mangle]
pub unsafe extern "C" fn wdan_normalizer_min_len(h: *const WdanNormalizer) -> usize {
    h.as_ref().map_or(0, |n| n.norm.min_len())
}

/// Normalizes `x[0..len]`, writing the normalized window and the per-step
/// mean and std, each of length `len`. `out_mean`/`out_std` may be null.
///
/// # Safety
/// Buffers must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn wdan_normalizer_normalize(
    h: *const WdanNormalizer,
    x: *const f64,
    len: usize,
    out_normalized: *mut f64,
    out_mean: *mut f64,
    out_std: *mut f64,
) -> WdanStatus {
    guard(|| {
        let n = handle(h, "normalizer")?;
        let x = slice(x, len, "x")?;
        let z_out = slice_mut(out_normalized, len, "out_normalized")?;
        let stats = n.norm.stats(x)?;
        z_out.copy_from_slice(&normalize(x, &stats, n.norm.epsilon())?);
        if !out_mean.is_null() {
            slice_mut(out_mean, len, "out_mean")?.copy_from_slice(&stats.mean);
        }
        if !out_std.is_null() {
            slice_mut(out_std, len, "out_std")?.copy_from_slice(&stats.std);
        }
        Ok(())
    })
}

/// Writes `y * (std + epsilon) + mean` elementwise into `out`.
///
/// # Safety
/// All buffers must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn wdan_denormalize(
    y: *const f64,
    mean: *const f64,
    std: *const f64,
    len: usize,
    epsilon: f64,
    out: *mut f64,
) -> WdanStatus {
    guard(|| {
        let (y, mean, std) = (slice(y, len, "y")?, slice(mean, len, "mean")?, slice(std, len, "std")?);
        let o = slice_mut(out, len, "out")?;
        o.copy_from_slice(&denormalize(y, mean, std, epsilon)?);
        Ok(())
    })
}

/// Augmented Dickey-Fuller t-statistic with a constant and `lag` lagged
/// differences.
///
/// # Safety
/// `x` must hold `len` elements and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wdan_adf_statistic(x: *const f64, len: usize, lag: usize, out: *mut f64) -> WdanStatus {
    guard(|| {
        let x = slice(x, len, "x")?;
        if out.is_null() {
            return Err(fail(WdanStatus::NullPointer, "out is null"));
        }
        *out = adf_statistic(x, lag)?.statistic;
        Ok(())
    })
}

fn model_from_json(text: &str) -> Result<WdanModel, Failure> {
    #[derive(serde::Deserialize)]
    struct Wrapped {
        bundle: BundleRecord,
    }
    let record = match serde_json::from_str::<Wrapped>(text) {
        Ok(w) => w.bundle,
        Err(_) => serde_json::from_str::<BundleRecord>(text).map_err(WdanError::from)?,
    };
    let bundle = ModelBundle::from_record(&record)?;
    let pipeline = Pipeline::new(
        record.variant,
        &record.norm,
        record.moving_avg_kernel,
        record.input_len,
        record.horizon,
    )?;
    Ok(WdanModel { bundle, pipeline })
}

/// Loads a model file written by `wdan train` (or a bare bundle record).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wdan_model_load(path: *const c_char, out: *mut *mut WdanModel) -> WdanStatus {
    guard(|| {
        out_ptr(out)?;
        let path = c_str(path, "path")?;
        let text = std::fs::read_to_string(path).map_err(|e| fail(WdanStatus::Data, format!("cannot read {path}: {e}")))?;
        *out = Box::into_raw(Box::new(model_from_json(&text)?));
        Ok(())
    })
}

/// Same as [`wdan_model_load`] from an in-memory JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wdan_model_from_json(json: *const c_char, out: *mut *mut WdanModel) -> WdanStatus {
    guard(|| {
        out_ptr(out)?;
        let text = c_str(json, "json")?;
        *out = Box::into_raw(Box::new(model_from_json(text)?));
        Ok(())
    })
}

/// # Safety
/// `h` must come from a model constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn wdan_model_free(h: *mut WdanModel) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Expected input length, or 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live model.
#[no_mangle]
pub unsafe extern "C" fn wdan_model_input_len(h: *const WdanModel) -> usize {
    h.as_ref().map_or(0, |m| m.pipeline.input_len())
}

/// Forecast length, or 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live model.
#[no_mangle]
pub unsafe extern "C" fn wdan_model_horizon(h: *const WdanModel) -> usize {
    h.as_ref().map_or(0, |m| m.pipeline.horizon())
}

/// Forecasts one channel: reads `input_len` values, writes `horizon`.
///
/// # Safety
/// `input` must hold `input_len` and `out` `horizon` elements.
#[no_mangle]
pub unsafe extern "C" fn wdan_model_forecast(
    h: *const WdanModel,
    input: *const f64,
    input_len: usize,
    out: *mut f64,
    horizon: usize,
) -> WdanStatus {
    guard(|| {
        let m = handle(h, "model")?;
        if input_len != m.pipeline.input_len() || horizon != m.pipeline.horizon() {
            return Err(fail(
                WdanStatus::InvalidArgument,
                format!(
                    "model expects input_len {} and horizon {}, got {input_len} and {horizon}",
                    m.pipeline.input_len(),
                    m.pipeline.horizon()
                ),
            ));
        }
        let x = slice(input, input_len, "input")?;
        let o = slice_mut(out, horizon, "out")?;
        // the target only feeds training-time statistics, never the forecast
        let sample = m.pipeline.prepare(x, &vec![0.0; horizon])?;
        o.copy_from_slice(&m.bundle.forecast(&sample)?);
        Ok(())
    })
}
