//! C ABI for the gauntlet detectors and text perturbations.
//!
//! Models are opaque handles created by the `*_open` functions and released
//! by the matching `*_free`. Functions return a [`GauntletStatus`] (or NULL
//! for string-returning calls) on failure; the message behind the most
//! recent failure on the calling thread is available from
//! [`gauntlet_last_error_message`]. Every `char*` returned by this library
//! must be released with [`gauntlet_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use gauntlet_core::detect::{ClassifierModel, DetectError};
use gauntlet_core::harness::normalize_defense;
use gauntlet_core::ngram::{NgramError, NgramModel};
use gauntlet_core::perturb;

/// Result codes for fallible calls.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GauntletStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// An input string was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The file could not be read or written.
    Io = 3,
    /// The file is not a valid model (wrong magic, version or truncation).
    Format = 4,
    /// The input text was empty or otherwise unscorable.
    Degenerate = 5,
    Internal = 6,
}

/// Opaque handle to a trained n-gram language model.
pub struct GauntletLm {
    model: NgramModel,
}

/// Opaque handle to a trained classifier.
pub struct GauntletClassifier {
    model: ClassifierModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let stored = CString::new(message)
        .unwrap_or_else(|_| CString::new("error message contained NUL").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(stored));
}

fn ngram_status(e: &NgramError) -> GauntletStatus {
    match e {
        NgramError::Io(_) => GauntletStatus::Io,
        NgramError::Format(_) | NgramError::Version { .. } => GauntletStatus::Format,
        NgramError::EmptyText => GauntletStatus::Degenerate,
        _ => GauntletStatus::Internal,
    }
}

fn detect_status(e: &DetectError) -> GauntletStatus {
    match e {
        DetectError::Io(_) => GauntletStatus::Io,
        DetectError::Format(_) => GauntletStatus::Format,
        DetectError::DegenerateText => GauntletStatus::Degenerate,
        _ => GauntletStatus::Internal,
    }
}

/// # Safety
/// `ptr` must be NULL or a valid NUL-terminated string.
unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, GauntletStatus> {
    if ptr.is_null() {
        set_last_error("argument is NULL".into());
        return Err(GauntletStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|e| {
        set_last_error(format!("invalid UTF-8: {e}"));
        GauntletStatus::InvalidUtf8
    })
}

fn owned_c_string(s: String) -> *mut c_char {
    match CString::new(s) {
        Ok(cs) => cs.into_raw(),
        Err(_) => {
            set_last_error("result contained an interior NUL byte".into());
            ptr::null_mut()
        }
    }
}

/// Version of the library as a static string; do not free.
#[no_mangle]
pub extern "C" fn gauntlet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the most recent failure on this thread, or NULL when no
/// failure has been recorded. The caller frees it with
/// [`gauntlet_string_free`].
#[no_mangle]
pub extern "C" fn gauntlet_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(message) => message.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a pointer previously returned by a gauntlet
/// function, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gauntlet_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads an n-gram model file into a new handle stored in `*out`.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gauntlet_lm_open(
    path: *const c_char,
    out: *mut *mut GauntletLm,
) -> GauntletStatus {
    if out.is_null() {
        set_last_error("out pointer is NULL".into());
        return GauntletStatus::NullArgument;
    }
    let path = match utf8_arg(path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    match NgramModel::load(Path::new(path)) {
        Ok(model) => {
            *out = Box::into_raw(Box::new(GauntletLm { model }));
            GauntletStatus::Ok
        }
        Err(e) => {
            set_last_error(e.to_string());
            *out = ptr::null_mut();
            ngram_status(&e)
        }
    }
}

/// Releases a language-model handle. NULL is ignored.
///
/// # Safety
/// `lm` must be NULL or a handle from [`gauntlet_lm_open`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gauntlet_lm_free(lm: *mut GauntletLm) {
    if !lm.is_null() {
        drop(Box::from_raw(lm));
    }
}

/// Perplexity of `text` under the model, written to `*out`.
///
/// # Safety
/// `lm` must be a live handle; `text` a valid NUL-terminated string; `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gauntlet_lm_perplexity(
    lm: *const GauntletLm,
    text: *const c_char,
    out: *mut f64,
) -> GauntletStatus {
    if lm.is_null() || out.is_null() {
        set_last_error("handle or out pointer is NULL".into());
        return GauntletStatus::NullArgument;
    }
    let text = match utf8_arg(text) {
        Ok(t) => t,
        Err(status) => return status,
    };
    match (*lm).model.perplexity(text) {
        Ok(score) => {
            *out = score.value;
            GauntletStatus::Ok
        }
        Err(e) => {
            set_last_error(e.to_string());
            ngram_status(&e)
        }
    }
}

/// Burstiness (variation of per-sentence perplexity) of `text`.
///
/// # Safety
/// Same contract as [`gauntlet_lm_perplexity`].
#[no_mangle]
pub unsafe extern "C" fn gauntlet_lm_burstiness(
    lm: *const GauntletLm,
    text: *const c_char,
    out: *mut f64,
) -> GauntletStatus {
    if lm.is_null() || out.is_null() {
        set_last_error("handle or out pointer is NULL".into());
        return GauntletStatus::NullArgument;
    }
    let text = match utf8_arg(text) {
        Ok(t) => t,
        Err(status) => return status,
    };
    match (*lm).model.burstiness(text) {
        Ok(score) => {
            *out = score.value;
            GauntletStatus::Ok
        }
        Err(e) => {
            set_last_error(e.to_string());
            ngram_status(&e)
        }
    }
}

/// Loads a classifier model file into a new handle stored in `*out`.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gauntlet_classifier_open(
    path: *const c_char,
    out: *mut *mut GauntletClassifier,
) -> GauntletStatus {
    if out.is_null() {
        set_last_error("out pointer is NULL".into());
        return GauntletStatus::NullArgument;
    }
    let path = match utf8_arg(path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    match ClassifierModel::load(Path::new(path)) {
        Ok(model) => {
            *out = Box::into_raw(Box::new(GauntletClassifier { model }));
            GauntletStatus::Ok
        }
        Err(e) => {
            set_last_error(e.to_string());
            *out = ptr::null_mut();
            detect_status(&e)
        }
    }
}

/// Releases a classifier handle. NULL is ignored.
///
/// # Safety
/// `clf` must be NULL or a handle from [`gauntlet_classifier_open`], not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn gauntlet_classifier_free(clf: *mut GauntletClassifier) {
    if !clf.is_null() {
        drop(Box::from_raw(clf));
    }
}

/// P(AI-generated) for `text` under the classifier, written to `*out`.
///
/// # Safety
/// `clf` must be a live handle; `text` a valid NUL-terminated string; `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gauntlet_classifier_ai_probability(
    clf: *const GauntletClassifier,
    text: *const c_char,
    out: *mut f64,
) -> GauntletStatus {
    if clf.is_null() || out.is_null() {
        set_last_error("handle or out pointer is NULL".into());
        return GauntletStatus::NullArgument;
    }
    let text = match utf8_arg(text) {
        Ok(t) => t,
        Err(status) => return status,
    };
    *out = (*clf).model.ai_probability(text);
    GauntletStatus::Ok
}

/// Inserts one space before the seed-chosen comma and returns the edited
/// text as a new string (NULL on error). `*out_applied` reports whether an
/// edit happened; a text without commas comes back unchanged.
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out_applied` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn gauntlet_space_infi(
    text: *const c_char,
    seed: u64,
    out_applied: *mut bool,
) -> *mut c_char {
    let text = match utf8_arg(text) {
        Ok(t) => t,
        Err(_) => return ptr::null_mut(),
    };
    let outcome = perturb::space_infi(text, seed);
    if !out_applied.is_null() {
        *out_applied = outcome.applied;
    }
    owned_c_string(outcome.text)
}

/// Deletes whitespace runs that precede `, . ; : ! ?` and returns the
/// normalized text as a new string (NULL on error).
///
/// # Safety
/// `text` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gauntlet_normalize_defense(text: *const c_char) -> *mut c_char {
    let text = match utf8_arg(text) {
        Ok(t) => t,
        Err(_) => return ptr::null_mut(),
    };
    owned_c_string(normalize_defense(text))
}
