//! C interface to the checker.
//!
//! Handles are opaque and owned by the caller once returned. Every fallible
//! call returns a [`TtdrStatus`]; on failure the message is available from
//! [`ttdr_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ttdreach::{check, parse_ttd, CheckError, CheckOptions, Engine, Status, Ttd};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TtdrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Model = 4,
    /// The two engines gave different answers. This is a bug.
    Disagreement = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TtdrEngine {
    Pathwise = 0,
    Bws = 1,
    Both = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TtdrResult {
    Reachable = 0,
    Unreachable = 1,
    Unknown = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TtdrStats {
    pub paths: usize,
    pub loopfree: usize,
    pub simple: usize,
    pub spaghetti: usize,
    pub solver_calls: usize,
    pub bws_calls: usize,
    pub time_ms: u64,
}

/// A parsed diagram.
pub struct TtdrDiagram(Ttd);

/// The outcome of a check.
pub struct TtdrVerdict(ttdreach::Verdict);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn guard(f: impl FnOnce() -> Result<(), (TtdrStatus, String)>) -> TtdrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TtdrStatus::Ok,
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            TtdrStatus::Panic
        }
    }
}

fn null() -> (TtdrStatus, String) {
    (TtdrStatus::NullPointer, "null pointer argument".into())
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ttdr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a NUL-terminated diagram description into `*out`.
///
/// # Safety
/// `text` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ttdr_parse(text: *const c_char, out: *mut *mut TtdrDiagram) -> TtdrStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return Err(null());
        }
        // SAFETY: checked non-null; caller guarantees NUL termination.
        let text = unsafe { CStr::from_ptr(text) }.to_str().map_err(|e| (TtdrStatus::InvalidUtf8, e.to_string()))?;
        let parsed = parse_ttd(text).map_err(|e| (TtdrStatus::Parse, e.to_string()))?;
        // SAFETY: checked non-null.
        unsafe { *out = Box::into_raw(Box::new(TtdrDiagram(parsed.ttd))) };
        Ok(())
    })
}

/// # Safety
/// `d` must come from [`ttdr_parse`] and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn ttdr_diagram_free(d: *mut TtdrDiagram) {
    if !d.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(d) });
    }
}

/// Runs the checker. `max_paths` of 0 means unbounded.
///
/// # Safety
/// `d` must be a live diagram handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ttdr_check(
    d: *const TtdrDiagram,
    engine: TtdrEngine,
    max_paths: usize,
    out: *mut *mut TtdrVerdict,
) -> TtdrStatus {
    guard(|| {
        if d.is_null() || out.is_null() {
            return Err(null());
        }
        // SAFETY: checked non-null; caller keeps the handle alive.
        let d = unsafe { &(*d).0 };
        let options = CheckOptions {
            engine: match engine {
                TtdrEngine::Pathwise => Engine::Pathwise,
                TtdrEngine::Bws => Engine::Bws,
                TtdrEngine::Both => Engine::Both,
            },
            max_paths: (max_paths > 0).then_some(max_paths),
            ..CheckOptions::default()
        };
        let report = check(d, &options).map_err(|e| match e {
            CheckError::Model(m) => (TtdrStatus::Model, m.to_string()),
            e @ CheckError::Disagreement { .. } => (TtdrStatus::Disagreement, e.to_string()),
        })?;
        // SAFETY: checked non-null.
        unsafe { *out = Box::into_raw(Box::new(TtdrVerdict(report.verdict))) };
        Ok(())
    })
}

/// # Safety
/// `v` must be a live verdict handle.
#[no_mangle]
pub unsafe extern "C" fn ttdr_verdict_result(v: *const TtdrVerdict) -> TtdrResult {
    // SAFETY: caller contract.
    match unsafe { &(*v).0 }.status {
        Status::Reachable => TtdrResult::Reachable,
        Status::Unreachable => TtdrResult::Unreachable,
        Status::Unknown => TtdrResult::Unknown,
    }
}

/// # Safety
/// `v` must be a live verdict handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ttdr_verdict_stats(v: *const TtdrVerdict, out: *mut TtdrStats) -> TtdrStatus {
    guard(|| {
        if v.is_null() || out.is_null() {
            return Err(null());
        }
        // SAFETY: checked non-null.
        let s = unsafe { &(*v).0 }.stats;
        let stats = TtdrStats {
            paths: s.paths,
            loopfree: s.loopfree,
            simple: s.simple,
            spaghetti: s.spaghetti,
            solver_calls: s.solver_calls,
            bws_calls: s.bws_calls,
            time_ms: u64::try_from(s.time_ms).unwrap_or(u64::MAX),
        };
        // SAFETY: checked non-null.
        unsafe { *out = stats };
        Ok(())
    })
}

/// The human-readable verdict block. Free it with [`ttdr_string_free`].
/// Returns NULL on a NULL handle.
///
/// # Safety
/// `v` must be a live verdict handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ttdr_verdict_render(v: *const TtdrVerdict) -> *mut c_char {
    if v.is_null() {
        set_error("null pointer argument");
        return ptr::null_mut();
    }
    // SAFETY: checked non-null.
    let text = unsafe { &(*v).0 }.render();
    CString::new(text).map_or(ptr::null_mut(), CString::into_raw)
}

/// # Safety
/// `s` must come from this library. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn ttdr_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// # Safety
/// `v` must come from [`ttdr_check`] and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn ttdr_verdict_free(v: *mut TtdrVerdict) {
    if !v.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(v) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_arguments_are_reported() {
        let mut d = ptr::null_mut();
        assert_eq!(unsafe { ttdr_parse(ptr::null(), &mut d) }, TtdrStatus::NullPointer);
        let msg = unsafe { CStr::from_ptr(ttdr_last_error_message()) };
        assert_eq!(msg.to_str().unwrap(), "null pointer argument");
        assert!(unsafe { ttdr_verdict_render(ptr::null()) }.is_null());
    }

    #[test]
    fn invalid_utf8_is_rejected() {
        let bytes = b"shared \xff\0";
        let mut d = ptr::null_mut();
        let st = unsafe { ttdr_parse(bytes.as_ptr().cast(), &mut d) };
        assert_eq!(st, TtdrStatus::InvalidUtf8);
        assert!(d.is_null());
    }
}
