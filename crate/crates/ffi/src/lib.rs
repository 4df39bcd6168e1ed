//! C ABI over the drexplainer pipeline.
//!
//! Every fallible call returns a [`DrxStatus`]; on failure the message is
//! available from [`drx_last_error`] on the same thread until the next call.
//! Handles are opaque and must be released with their matching `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use drexplainer::explain::{to_json, Method};
use drexplainer::io::{RunConfig, SyntheticSpec};
use drexplainer::pipeline::{self, Trained};
use drexplainer::Error;

/// Result of every fallible call. Validation and runtime failures use the
/// same split as the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrxStatus {
    Ok = 0,
    /// Bad input: malformed files, config violations, unknown names.
    Validation = 1,
    /// Failure while running: missing files, numerical trouble.
    Runtime = 2,
    NullArgument = 3,
    InvalidUtf8 = 4,
    Panic = 5,
}

/// A run configuration.
pub struct DrxConfig {
    inner: RunConfig,
}

/// A checkpointed model bound to the graph it was trained on.
pub struct DrxModel {
    inner: Trained,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

enum Fail {
    Status(DrxStatus, String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DrxStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DrxStatus::Ok,
        Ok(Err(Fail::Status(status, msg))) => {
            set_error(msg);
            status
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            if e.is_validation() {
                DrxStatus::Validation
            } else {
                DrxStatus::Runtime
            }
        }
        Err(_) => {
            set_error("internal panic");
            DrxStatus::Panic
        }
    }
}

unsafe fn text<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if ptr.is_null() {
        return Err(Fail::Status(DrxStatus::NullArgument, format!("`{name}` is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Fail::Status(DrxStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn handle<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Fail> {
    ptr.as_ref()
        .ok_or_else(|| Fail::Status(DrxStatus::NullArgument, format!("`{name}` is null")))
}

fn null_out(name: &str) -> Fail {
    Fail::Status(DrxStatus::NullArgument, format!("`{name}` is null"))
}

/// Message of the last failure on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn drx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn drx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New configuration with default values.
#[no_mangle]
pub extern "C" fn drx_config_new() -> *mut DrxConfig {
    Box::into_raw(Box::new(DrxConfig {
        inner: RunConfig::default(),
    }))
}

/// Reads a `key = value` config file into a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn drx_config_load(path: *const c_char, out: *mut *mut DrxConfig) -> DrxStatus {
    guard(|| {
        let path = text(path, "path")?;
        if out.is_null() {
            return Err(null_out("out"));
        }
        let inner = RunConfig::load(Path::new(path), None)?;
        *out = Box::into_raw(Box::new(DrxConfig { inner }));
        Ok(())
    })
}

/// Sets one config key from its text form and revalidates.
///
/// # Safety
/// `cfg` must come from this library; `key` and `value` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn drx_config_set(cfg: *mut DrxConfig, key: *const c_char, value: *const c_char) -> DrxStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null_out("cfg"))?;
        let (key, value) = (text(key, "key")?, text(value, "value")?);
        let mut next = cfg.inner.clone();
        next.set(key, value)?;
        next.validate()?;
        cfg.inner = next;
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn drx_config_free(cfg: *mut DrxConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Writes the default synthetic dataset into the configured output directory.
///
/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn drx_synth(cfg: *const DrxConfig) -> DrxStatus {
    guard(|| {
        let cfg = handle(cfg, "cfg")?;
        pipeline::synth(&cfg.inner, &SyntheticSpec::default())?;
        Ok(())
    })
}

/// Cross-validates and writes reports and checkpoints to the output
/// directory. Mean AUC and AUPR are stored through the non-null pointers.
///
/// # Safety
/// `cfg` must come from this library; `auc` and `aupr` may be null.
#[no_mangle]
pub unsafe extern "C" fn drx_train(cfg: *const DrxConfig, auc: *mut f64, aupr: *mut f64) -> DrxStatus {
    guard(|| {
        let cfg = handle(cfg, "cfg")?;
        let report = pipeline::train(&cfg.inner)?;
        if !auc.is_null() {
            *auc = report.mean.auc;
        }
        if !aupr.is_null() {
            *aupr = report.mean.aupr;
        }
        Ok(())
    })
}

/// Restores a checkpoint and rebuilds its training graph from the data files.
///
/// # Safety
/// `cfg` must come from this library, `checkpoint` must be NUL-terminated
/// and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn drx_model_load(
    cfg: *const DrxConfig,
    checkpoint: *const c_char,
    out: *mut *mut DrxModel,
) -> DrxStatus {
    guard(|| {
        let cfg = handle(cfg, "cfg")?;
        let checkpoint = text(checkpoint, "checkpoint")?;
        if out.is_null() {
            return Err(null_out("out"));
        }
        let inner = pipeline::load_trained(&cfg.inner, Path::new(checkpoint))?;
        *out = Box::into_raw(Box::new(DrxModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn drx_model_free(model: *mut DrxModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Probability of `CELL,REL,DRUG` (names, REL sensitive or resistant).
///
/// # Safety
/// `model` must come from this library, `triple` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn drx_model_score(model: *const DrxModel, triple: *const c_char, out: *mut f64) -> DrxStatus {
    guard(|| {
        let model = handle(model, "model")?;
        let triple = text(triple, "triple")?;
        if out.is_null() {
            return Err(null_out("out"));
        }
        let t = pipeline::parse_triple(&model.inner.graph, triple)?;
        *out = model.inner.context()?.score(t)?;
        Ok(())
    })
}

/// Explains `CELL,REL,DRUG` with `method` (`mask`, `explaine` or
/// `deletion`) using the explainer keys of `cfg`. The JSON record is
/// returned in `*out` and must be released with [`drx_string_free`].
///
/// # Safety
/// Handles must come from this library, strings NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn drx_explain_json(
    model: *const DrxModel,
    cfg: *const DrxConfig,
    triple: *const c_char,
    method: *const c_char,
    out: *mut *mut c_char,
) -> DrxStatus {
    guard(|| {
        let model = handle(model, "model")?;
        let cfg = handle(cfg, "cfg")?;
        let (triple, method) = (text(triple, "triple")?, text(method, "method")?);
        if out.is_null() {
            return Err(null_out("out"));
        }
        let method: Method = method.parse()?;
        let target = pipeline::parse_triple(&model.inner.graph, triple)?;
        let ctx = model.inner.context()?;
        let sub = drexplainer::bench::explain(&ctx, method, target, &cfg.inner.mask_config())?;
        let json = to_json(&model.inner.graph, &sub)?;
        *out = CString::new(json).map_err(|e| Fail::Status(DrxStatus::Runtime, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be a string returned by this library, freed once. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn drx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
