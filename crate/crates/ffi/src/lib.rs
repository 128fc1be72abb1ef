//! C ABI over the progressive entity resolution core: load a profile
//! collection, build an emitter for one of the six methods, and pull
//! comparisons in decreasing estimated matching likelihood.
//!
//! Conventions: every constructor hands back an opaque handle through an out
//! pointer and reports a [`PerStatus`]; handles are freed with the matching
//! `*_free` function and must not be used afterwards. On any failing call,
//! [`per_last_error_message`] returns a thread-local, NUL-terminated
//! description that stays valid until the next failing call on the same
//! thread. Handles are not synchronized; share a handle across threads only
//! behind external locking.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;

use per_core::ingest::{load_profiles, DataFormat, DatasetSpec};
use per_core::{build_emitter, Method, MethodParams, ProfileCollection, ProgressiveEmitter};

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerStatus {
    Ok = 0,
    /// The emitter has no further comparisons; not an error.
    Exhausted = 1,
    NullArgument = 2,
    InvalidArgument = 3,
    ParseError = 4,
    IoError = 5,
    /// The blocking workflow produced no blocks for this collection.
    EmptyBlocks = 6,
    InvalidUtf8 = 7,
}

/// Emission method selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerMethod {
    SaPsn = 0,
    SaPsab = 1,
    LsPsn = 2,
    GsPsn = 3,
    Pbs = 4,
    Pps = 5,
}

impl From<PerMethod> for Method {
    fn from(method: PerMethod) -> Method {
        match method {
            PerMethod::SaPsn => Method::SaPsn,
            PerMethod::SaPsab => Method::SaPsab,
            PerMethod::LsPsn => Method::LsPsn,
            PerMethod::GsPsn => Method::GsPsn,
            PerMethod::Pbs => Method::Pbs,
            PerMethod::Pps => Method::Pps,
        }
    }
}

/// Profile file format.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerFormat {
    Csv = 0,
    Jsonl = 1,
}

/// One emitted candidate pair. `i` and `j` are dense profile ids (canonical
/// order: ascending in dirty mode, source 0 before source 1 in clean-clean
/// mode); `weight` is the method's matching-likelihood estimate.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PerComparison {
    pub i: u32,
    pub j: u32,
    pub weight: f64,
}

/// Method tuning knobs; `per_params_default` returns the usual benchmark
/// configuration.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PerParams {
    /// Minimum suffix length (sa-psab).
    pub l_min: u32,
    /// Window range bound (gs-psn) and window cap (ls-psn).
    pub w_max: u32,
    /// Comparisons kept per scheduled profile (pps).
    pub k_max: u32,
    pub purge_ratio: f64,
    pub filter_ratio: f64,
    /// Whether sa-psab purges oversized suffix nodes.
    pub psab_purge: bool,
}

/// An immutable, loaded profile collection.
pub struct PerCollection {
    inner: ProfileCollection,
}

/// A single-method emitter; owns its indexes and advances on every
/// `per_emitter_next` call.
pub struct PerEmitter {
    inner: Box<dyn ProgressiveEmitter>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<Vec<u8>>) {
    let rendered = CString::new(message).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = rendered);
}

fn fail(status: PerStatus, message: impl std::fmt::Display) -> PerStatus {
    set_error(message.to_string());
    status
}

/// Message for the most recent failing call on this thread. Never null;
/// empty when no failure has occurred yet.
#[unsafe(no_mangle)]
pub extern "C" fn per_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Default parameters: purge at 10%, filter at 80%, l_min 2, w_max 20,
/// k_max 10, suffix-node purging on.
#[unsafe(no_mangle)]
pub extern "C" fn per_params_default() -> PerParams {
    let defaults = MethodParams::default();
    PerParams {
        l_min: defaults.l_min as u32,
        w_max: defaults.w_max as u32,
        k_max: defaults.k_max as u32,
        purge_ratio: defaults.purge_ratio,
        filter_ratio: defaults.filter_ratio,
        psab_purge: defaults.psab_purge,
    }
}

unsafe fn required_str<'a>(pointer: *const c_char) -> Result<&'a str, PerStatus> {
    if pointer.is_null() {
        return Err(fail(PerStatus::NullArgument, "required string argument is null"));
    }
    unsafe { CStr::from_ptr(pointer) }
        .to_str()
        .map_err(|e| fail(PerStatus::InvalidUtf8, e))
}

unsafe fn optional_str<'a>(pointer: *const c_char) -> Result<Option<&'a str>, PerStatus> {
    if pointer.is_null() {
        return Ok(None);
    }
    unsafe { required_str(pointer) }.map(Some)
}

/// Loads a profile collection. `path0` is required; a non-null `path1` names
/// the source-1 file and switches to clean-clean mode. A non-null
/// `id_column` names the external-id column or key. On success, writes a
/// handle to `out` that must be freed with `per_collection_free`.
///
/// # Safety
/// String arguments must be NUL-terminated and valid for the call; `out`
/// must be a valid pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn per_collection_load(
    path0: *const c_char,
    path1: *const c_char,
    format: PerFormat,
    id_column: *const c_char,
    out: *mut *mut PerCollection,
) -> PerStatus {
    if out.is_null() {
        return fail(PerStatus::NullArgument, "out pointer is null");
    }
    let path0 = match unsafe { required_str(path0) } {
        Ok(s) => PathBuf::from(s),
        Err(status) => return status,
    };
    let path1 = match unsafe { optional_str(path1) } {
        Ok(s) => s.map(PathBuf::from),
        Err(status) => return status,
    };
    let id_column = match unsafe { optional_str(id_column) } {
        Ok(s) => s.map(str::to_string),
        Err(status) => return status,
    };

    let format = match format {
        PerFormat::Csv => DataFormat::Csv,
        PerFormat::Jsonl => DataFormat::Jsonl,
    };
    let mut spec = match path1 {
        Some(second) => DatasetSpec::clean_clean(path0, second, format),
        None => DatasetSpec::dirty(path0, format),
    };
    if let Some(column) = id_column {
        spec = spec.with_id_column(column);
    }

    match load_profiles(&spec) {
        Ok((collection, _)) => {
            let handle = Box::new(PerCollection { inner: collection });
            unsafe { out.write(Box::into_raw(handle)) };
            PerStatus::Ok
        }
        Err(error) => {
            use per_core::ingest::IngestError;
            let status = match &error {
                IngestError::Io { .. } => PerStatus::IoError,
                IngestError::BadSpec(_) => PerStatus::InvalidArgument,
                _ => PerStatus::ParseError,
            };
            fail(status, error)
        }
    }
}

/// Number of profiles in the collection; 0 for a null handle.
///
/// # Safety
/// `collection` must be a live handle from `per_collection_load` or null.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn per_collection_len(collection: *const PerCollection) -> usize {
    if collection.is_null() {
        return 0;
    }
    unsafe { &*collection }.inner.len()
}

/// Frees a collection handle; null is a no-op.
///
/// # Safety
/// `collection` must be a handle from `per_collection_load`, not yet freed.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn per_collection_free(collection: *mut PerCollection) {
    if !collection.is_null() {
        drop(unsafe { Box::from_raw(collection) });
    }
}

/// Builds an initialized emitter over the collection. A null `params` uses
/// `per_params_default`. The emitter copies what it needs: the collection
/// may be freed afterwards. Free with `per_emitter_free`.
///
/// # Safety
/// `collection` must be a live handle; `params` must be null or valid;
/// `out` must be a valid pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn per_emitter_new(
    collection: *const PerCollection,
    method: PerMethod,
    params: *const PerParams,
    out: *mut *mut PerEmitter,
) -> PerStatus {
    if out.is_null() || collection.is_null() {
        return fail(PerStatus::NullArgument, "collection or out pointer is null");
    }
    let collection = unsafe { &*collection };
    let params = if params.is_null() { per_params_default() } else { unsafe { *params } };
    let method_params = MethodParams {
        l_min: params.l_min as usize,
        w_max: params.w_max as usize,
        ls_window_cap: Some(params.w_max as usize),
        k_max: params.k_max as usize,
        purge_ratio: params.purge_ratio,
        filter_ratio: params.filter_ratio,
        psab_purge: params.psab_purge,
    };
    match build_emitter(Method::from(method), &collection.inner, &method_params) {
        Ok(inner) => {
            unsafe { out.write(Box::into_raw(Box::new(PerEmitter { inner }))) };
            PerStatus::Ok
        }
        Err(error) => {
            use per_core::EmitError;
            let status = match &error {
                EmitError::EmptyBlocks => PerStatus::EmptyBlocks,
                EmitError::InvalidParameter(_) => PerStatus::InvalidArgument,
            };
            fail(status, error)
        }
    }
}

/// Writes the next best comparison to `out` and returns `Ok`, or returns
/// `Exhausted` once no comparison remains (every later call keeps returning
/// `Exhausted`).
///
/// # Safety
/// `emitter` must be a live handle; `out` must be a valid pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn per_emitter_next(
    emitter: *mut PerEmitter,
    out: *mut PerComparison,
) -> PerStatus {
    if emitter.is_null() || out.is_null() {
        return fail(PerStatus::NullArgument, "emitter or out pointer is null");
    }
    match unsafe { &mut *emitter }.inner.next_comparison() {
        Some(comparison) => {
            unsafe {
                out.write(PerComparison {
                    i: comparison.i,
                    j: comparison.j,
                    weight: comparison.weight,
                });
            }
            PerStatus::Ok
        }
        None => PerStatus::Exhausted,
    }
}

/// Frees an emitter handle; null is a no-op.
///
/// # Safety
/// `emitter` must be a handle from `per_emitter_new`, not yet freed.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn per_emitter_free(emitter: *mut PerEmitter) {
    if !emitter.is_null() {
        drop(unsafe { Box::from_raw(emitter) });
    }
}
