//! C ABI over `shapreg`.
//!
//! Conventions:
//! - every fallible function returns a [`ShapregStatus`]; on failure the
//!   message is kept per thread and read with [`shapreg_last_error_message`];
//! - models are opaque [`ShapregModel`] handles released with
//!   [`shapreg_model_free`];
//! - strings returned by the library are released with [`shapreg_string_free`];
//! - matrices are row-major `double` buffers;
//! - set functions are `double` arrays over the non-empty coalitions of
//!   size at most `k`, singletons first, then pairs `(i, j)` in
//!   lexicographic order, then triples, and so on.
//!
//! Panics never cross the boundary; they surface as `SHAPREG_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use shapreg::bench::Dataset;
use shapreg::{
    capacity_from_mobius, combinatorial_dimension, mobius_from_capacity, mobius_from_shapley,
    shapley_from_mobius, Basis, Error, FitConfig, Matrix, Penalty, SetFunction, ShapleyModel,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapregStatus {
    Ok = 0,
    /// Bad argument value, including a null pointer.
    InvalidArgument = 1,
    /// Malformed or inconsistent data, file or model.
    DataError = 2,
    /// The fit stopped before reaching the tolerance; the model is still returned.
    NotConverged = 3,
    Io = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapregPenalty {
    None = 0,
    L1 = 1,
    L2 = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapregBasis {
    Capacity = 0,
    Mobius = 1,
    Shapley = 2,
}

/// A fitted k-additive model.
pub struct ShapregModel {
    inner: ShapleyModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> ShapregStatus {
    match err {
        Error::InvalidArgument(_) | Error::TooLarge { .. } | Error::BasisMismatch { .. } => {
            ShapregStatus::InvalidArgument
        }
        Error::Io { .. } => ShapregStatus::Io,
        _ => ShapregStatus::DataError,
    }
}

struct Failure(ShapregStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(ShapregStatus::InvalidArgument, msg.into())
}

/// Runs `f`, records any error or panic, and returns the status.
fn guard(f: impl FnOnce() -> Result<ShapregStatus, Failure>) -> ShapregStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => {
            if status == ShapregStatus::Ok {
                clear_last_error();
            }
            status
        }
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
            set_last_error(format!("internal panic: {msg}"));
            ShapregStatus::Panic
        }
    }
}

unsafe fn path_arg<'a>(p: *const c_char, name: &str) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(invalid(format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| invalid(format!("{name} is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(invalid(format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn model_arg<'a>(m: *const ShapregModel) -> Result<&'a ShapleyModel, Failure> {
    m.as_ref()
        .map(|h| &h.inner)
        .ok_or_else(|| invalid("model handle is null"))
}

fn into_handle(model: ShapleyModel) -> *mut ShapregModel {
    Box::into_raw(Box::new(ShapregModel { inner: model }))
}

/// Message of the last failed call on this thread, or null.
///
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn shapreg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn shapreg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shapreg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Number of non-empty coalitions of size at most `k` among `n` features.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn shapreg_dimension(n: usize, k: usize, out: *mut u64) -> ShapregStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| invalid("out is null"))?;
        *out = combinatorial_dimension(n, k)?;
        Ok(ShapregStatus::Ok)
    })
}

/// Reads a model JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn shapreg_model_load(
    path: *const c_char,
    out: *mut *mut ShapregModel,
) -> ShapregStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let out = out.as_mut().ok_or_else(|| invalid("out is null"))?;
        *out = into_handle(ShapleyModel::load(path)?);
        Ok(ShapregStatus::Ok)
    })
}

/// Writes a model JSON file.
///
/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn shapreg_model_save(
    model: *const ShapregModel,
    path: *const c_char,
) -> ShapregStatus {
    guard(|| {
        model_arg(model)?.save(path_arg(path, "path")?)?;
        Ok(ShapregStatus::Ok)
    })
}

/// Serializes a model to a newly allocated JSON string.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer. Free the result
/// with [`shapreg_string_free`].
#[no_mangle]
pub unsafe extern "C" fn shapreg_model_to_json(
    model: *const ShapregModel,
    out: *mut *mut c_char,
) -> ShapregStatus {
    guard(|| {
        let text = model_arg(model)?.to_json()?;
        let out = out.as_mut().ok_or_else(|| invalid("out is null"))?;
        *out = CString::new(text)
            .map_err(|_| invalid("model JSON contains a NUL byte"))?
            .into_raw();
        Ok(ShapregStatus::Ok)
    })
}

/// Releases a model handle. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shapreg_model_free(model: *mut ShapregModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Feature count, additivity order and bias of a model. Any out pointer may be null.
///
/// # Safety
/// `model` must be a live handle; non-null out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn shapreg_model_info(
    model: *const ShapregModel,
    n_features: *mut usize,
    k: *mut usize,
    bias: *mut f64,
) -> ShapregStatus {
    guard(|| {
        let m = model_arg(model)?;
        if let Some(o) = n_features.as_mut() {
            *o = m.n();
        }
        if let Some(o) = k.as_mut() {
            *o = m.k();
        }
        if let Some(o) = bias.as_mut() {
            *o = m.bias();
        }
        Ok(ShapregStatus::Ok)
    })
}

/// Copies the interaction indices, in canonical order, into `out`.
///
/// # Safety
/// `model` must be a live handle; `out` must hold `len` doubles, where `len`
/// is the model's dimension.
#[no_mangle]
pub unsafe extern "C" fn shapreg_model_indices(
    model: *const ShapregModel,
    out: *mut f64,
    len: usize,
) -> ShapregStatus {
    guard(|| {
        let values = model_arg(model)?.indices().values();
        if len != values.len() {
            return Err(invalid(format!(
                "output holds {len} values, the model has {}",
                values.len()
            )));
        }
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(values);
        Ok(ShapregStatus::Ok)
    })
}

/// Positive-class probabilities for `rows` raw feature rows.
///
/// # Safety
/// `x` must hold `rows * cols` doubles and `out` must hold `rows` doubles.
#[no_mangle]
pub unsafe extern "C" fn shapreg_model_predict_proba(
    model: *const ShapregModel,
    x: *const f64,
    rows: usize,
    cols: usize,
    out: *mut f64,
) -> ShapregStatus {
    guard(|| {
        let m = model_arg(model)?;
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| invalid("rows * cols overflows"))?;
        let data = slice_arg(x, len, "x")?.to_vec();
        let proba = m.predict_proba(&Matrix::from_vec(rows, cols, data)?)?;
        if rows > 0 {
            if out.is_null() {
                return Err(invalid("out is null"));
            }
            std::slice::from_raw_parts_mut(out, rows).copy_from_slice(&proba);
        }
        Ok(ShapregStatus::Ok)
    })
}

/// Fits a `k`-additive model on raw features and 0/1 labels.
///
/// Returns `SHAPREG_STATUS_NOT_CONVERGED` with a usable model in `*out` when
/// the iteration budget runs out.
///
/// # Safety
/// `x` must hold `rows * cols` doubles, `y` must hold `rows` bytes and `out`
/// must be a valid pointer.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn shapreg_fit(
    x: *const f64,
    y: *const u8,
    rows: usize,
    cols: usize,
    k: usize,
    penalty: ShapregPenalty,
    lambda: f64,
    seed: u64,
    out: *mut *mut ShapregModel,
) -> ShapregStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| invalid("out is null"))?;
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| invalid("rows * cols overflows"))?;
        let data = slice_arg(x, len, "x")?.to_vec();
        let labels = slice_arg(y, rows, "y")?.to_vec();
        let names = (0..cols).map(|i| format!("x{i}")).collect();
        let dataset = Dataset::new(
            "ffi",
            Matrix::from_vec(rows, cols, data)?,
            labels,
            names,
            String::new(),
        )?;
        let penalty = match penalty {
            ShapregPenalty::None => Penalty::None,
            ShapregPenalty::L1 => Penalty::L1,
            ShapregPenalty::L2 => Penalty::L2,
        };
        let config = FitConfig {
            seed,
            ..FitConfig::new(penalty, lambda)
        };
        let result = shapreg::fit(&dataset, k, &config)?;
        *out = into_handle(result.model);
        if result.converged {
            Ok(ShapregStatus::Ok)
        } else {
            set_last_error(format!(
                "no convergence after {} iterations (optimality {:.3e})",
                result.iterations, result.grad_norm
            ));
            Ok(ShapregStatus::NotConverged)
        }
    })
}

/// Converts a set function between bases.
///
/// `input` and `output` hold `len` doubles in canonical order, where `len`
/// is the dimension for `(n, k)`. Capacity conversions require `k == n`.
///
/// # Safety
/// `input` and `output` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn shapreg_transform(
    n: usize,
    k: usize,
    from: ShapregBasis,
    to: ShapregBasis,
    input: *const f64,
    output: *mut f64,
    len: usize,
) -> ShapregStatus {
    guard(|| {
        let basis = |b: ShapregBasis| match b {
            ShapregBasis::Capacity => Basis::Capacity,
            ShapregBasis::Mobius => Basis::Moebius,
            ShapregBasis::Shapley => Basis::Shapley,
        };
        let values = slice_arg(input, len, "input")?.to_vec();
        let f = SetFunction::new(n, k, basis(from), values)?;
        let mobius = match from {
            ShapregBasis::Capacity => mobius_from_capacity(&f)?,
            ShapregBasis::Mobius => f,
            ShapregBasis::Shapley => mobius_from_shapley(&f)?,
        };
        let result = match to {
            ShapregBasis::Capacity => capacity_from_mobius(&mobius)?,
            ShapregBasis::Mobius => mobius,
            ShapregBasis::Shapley => shapley_from_mobius(&mobius)?,
        };
        if len > 0 {
            if output.is_null() {
                return Err(invalid("output is null"));
            }
            std::slice::from_raw_parts_mut(output, len).copy_from_slice(result.values());
        }
        Ok(ShapregStatus::Ok)
    })
}
