//! C ABI for the coupled-fusion library.
//!
//! Conventions:
//!
//! * Every fallible call returns a [`CfStatus`]; `CF_STATUS_OK` is zero.
//! * Models travel behind the opaque handle [`CfModel`]; create with
//!   `cf_model_load`, destroy with `cf_model_free`.
//! * Output buffers are caller-allocated; lengths are checked.
//! * `cf_last_error_message` returns a thread-local, NUL-terminated
//!   description of the most recent failure on the calling thread, valid
//!   until the next failing call on that thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use coupled_fusion::algebra::{self, Coupling};
use coupled_fusion::classifiers::{load_model, save_model, Model};
use coupled_fusion::error::Error;
use coupled_fusion::metrics::{generalized_mean, TrueClassProbabilities};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    DomainError = 3,
    DimensionMismatch = 4,
    ParseError = 5,
    FitError = 6,
    NumericError = 7,
    IoError = 8,
    ModelFormatError = 9,
    BufferTooSmall = 10,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_from(err: &Error) -> CfStatus {
    set_error(&err.to_string());
    match err {
        Error::Domain(_) | Error::Singularity(_) => CfStatus::DomainError,
        Error::Dimension { .. } => CfStatus::DimensionMismatch,
        Error::Parse { .. } => CfStatus::ParseError,
        Error::Fit(_) => CfStatus::FitError,
        Error::Numeric(_) => CfStatus::NumericError,
        Error::ModelFormat(_) => CfStatus::ModelFormatError,
        Error::Io { .. } => CfStatus::IoError,
    }
}

/// Message describing the most recent failure on this thread. Never null;
/// empty when no failure has occurred. Valid until the next failing call
/// on the same thread.
#[no_mangle]
pub extern "C" fn cf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

unsafe fn slice_arg<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if ptr.is_null() {
        return None;
    }
    Some(std::slice::from_raw_parts(ptr, len))
}

/// Coupled logarithm `ln_κ(x)`.
///
/// # Safety
/// `out` must point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn cf_coupled_log(x: f64, kappa: f64, out: *mut f64) -> CfStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return CfStatus::NullArgument;
    }
    let k = match Coupling::new(kappa) {
        Ok(k) => k,
        Err(e) => return status_from(&e),
    };
    match algebra::coupled_log(x, k) {
        Ok(v) => {
            *out = v;
            CfStatus::Ok
        }
        Err(e) => status_from(&e),
    }
}

/// Coupled exponential `exp_κ(x)`, with truncation/saturation semantics.
///
/// # Safety
/// `out` must point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn cf_coupled_exp(x: f64, kappa: f64, out: *mut f64) -> CfStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return CfStatus::NullArgument;
    }
    let k = match Coupling::new(kappa) {
        Ok(k) => k,
        Err(e) => return status_from(&e),
    };
    match algebra::coupled_exp(x, k) {
        Ok(v) => {
            *out = v;
            CfStatus::Ok
        }
        Err(e) => status_from(&e),
    }
}

/// Coupled product of `len` nonnegative factors.
///
/// # Safety
/// `xs` must point to `len` readable doubles and `out` to one writable
/// double.
#[no_mangle]
pub unsafe extern "C" fn cf_coupled_product(
    xs: *const f64,
    len: usize,
    kappa: f64,
    out: *mut f64,
) -> CfStatus {
    let (Some(xs), false) = (slice_arg(xs, len), out.is_null()) else {
        set_error("null argument");
        return CfStatus::NullArgument;
    };
    let k = match Coupling::new(kappa) {
        Ok(k) => k,
        Err(e) => return status_from(&e),
    };
    match algebra::coupled_product(xs, k) {
        Ok(v) => {
            *out = v;
            CfStatus::Ok
        }
        Err(e) => status_from(&e),
    }
}

/// Log-domain coupled product over `len` natural-log factors.
///
/// # Safety
/// `logs` must point to `len` readable doubles and `out` to one writable
/// double.
#[no_mangle]
pub unsafe extern "C" fn cf_log_coupled_product(
    logs: *const f64,
    len: usize,
    kappa: f64,
    out: *mut f64,
) -> CfStatus {
    let (Some(logs), false) = (slice_arg(logs, len), out.is_null()) else {
        set_error("null argument");
        return CfStatus::NullArgument;
    };
    let k = match Coupling::new(kappa) {
        Ok(k) => k,
        Err(e) => return status_from(&e),
    };
    match algebra::log_coupled_product(logs, k) {
        Ok(v) => {
            *out = v;
            CfStatus::Ok
        }
        Err(e) => status_from(&e),
    }
}

/// Generalized mean of `len` probabilities at risk bias `r` with floor
/// `floor`.
///
/// # Safety
/// `probs` must point to `len` readable doubles in [0, 1] and `out` to one
/// writable double.
#[no_mangle]
pub unsafe extern "C" fn cf_generalized_mean(
    probs: *const f64,
    len: usize,
    r: f64,
    floor: f64,
    out: *mut f64,
) -> CfStatus {
    let (Some(probs), false) = (slice_arg(probs, len), out.is_null()) else {
        set_error("null argument");
        return CfStatus::NullArgument;
    };
    match TrueClassProbabilities::new(probs.to_vec()) {
        Ok(p) => {
            *out = generalized_mean(&p, r, floor);
            CfStatus::Ok
        }
        Err(e) => status_from(&e),
    }
}

/// Opaque handle to a fitted model loaded from a model file.
pub struct CfModel {
    inner: Model,
}

unsafe fn path_arg<'a>(ptr: *const c_char) -> Result<&'a Path, CfStatus> {
    if ptr.is_null() {
        set_error("path is null");
        return Err(CfStatus::NullArgument);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(CfStatus::InvalidUtf8)
        }
    }
}

/// Loads a model file written by the library (`out/models/*.model`).
/// On success stores a heap handle in `*out`; release with
/// `cf_model_free`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer
/// slot.
#[no_mangle]
pub unsafe extern "C" fn cf_model_load(path: *const c_char, out: *mut *mut CfModel) -> CfStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return CfStatus::NullArgument;
    }
    *out = ptr::null_mut();
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    match load_model(path) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(CfModel { inner }));
            CfStatus::Ok
        }
        Err(e) => status_from(&e),
    }
}

/// Writes the model back to a file in the versioned text format.
///
/// # Safety
/// `model` must be a live handle from `cf_model_load`; `path`
/// NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cf_model_save(model: *const CfModel, path: *const c_char) -> CfStatus {
    if model.is_null() {
        set_error("model handle is null");
        return CfStatus::NullArgument;
    }
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    match save_model(&(*model).inner, path) {
        Ok(()) => CfStatus::Ok,
        Err(e) => status_from(&e),
    }
}

/// Releases a model handle. Null is a no-op.
///
/// # Safety
/// `model` must be null or a handle returned by `cf_model_load` that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn cf_model_free(model: *mut CfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Feature dimension the model expects.
///
/// # Safety
/// `model` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_model_dim(model: *const CfModel, out: *mut usize) -> CfStatus {
    if model.is_null() || out.is_null() {
        set_error("null argument");
        return CfStatus::NullArgument;
    }
    *out = (*model).inner.dim();
    CfStatus::Ok
}

/// Number of classes the model scores.
///
/// # Safety
/// `model` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_model_class_count(model: *const CfModel, out: *mut usize) -> CfStatus {
    if model.is_null() || out.is_null() {
        set_error("null argument");
        return CfStatus::NullArgument;
    }
    *out = (*model).inner.class_count();
    CfStatus::Ok
}

/// Posterior class probabilities for one feature vector.
///
/// `features` must hold `cf_model_dim` doubles; `out_probs` must have room
/// for `out_len >= cf_model_class_count` doubles. The posterior sums to 1.
///
/// # Safety
/// All pointers must satisfy the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn cf_model_predict(
    model: *const CfModel,
    features: *const f64,
    features_len: usize,
    out_probs: *mut f64,
    out_len: usize,
) -> CfStatus {
    if model.is_null() || out_probs.is_null() {
        set_error("null argument");
        return CfStatus::NullArgument;
    }
    let Some(features) = slice_arg(features, features_len) else {
        set_error("features pointer is null");
        return CfStatus::NullArgument;
    };
    let model = &(*model).inner;
    let classes = model.class_count();
    if out_len < classes {
        set_error("output buffer smaller than the class count");
        return CfStatus::BufferTooSmall;
    }
    match model.predict(features) {
        Ok(post) => {
            let out = std::slice::from_raw_parts_mut(out_probs, classes);
            out.copy_from_slice(post.probs());
            CfStatus::Ok
        }
        Err(e) => status_from(&e),
    }
}
