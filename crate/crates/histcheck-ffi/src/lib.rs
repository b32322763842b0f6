//! C ABI for the decoherence checks.
//!
//! Bundles are opaque handles created from the same JSON accepted by the
//! CLI. Every check returns a status code and, on success, a heap-allocated
//! JSON report string that must be released with `histcheck_string_free`.

use histcheck::criteria::{
    check_approx_dh, check_approx_strong, check_commutators, check_exact, check_theorem2_bound,
    CheckReport, CriteriaError, Epsilon,
};
use histcheck::histories::{GramConfig, HistoriesError};
use histcheck::io::{parse_bundle, Bundle};
use histcheck::{DEFAULT_P_NULL, DEFAULT_TOL};
use std::ffi::{c_char, CStr, CString};
use std::ptr;

/// Status codes returned by every FFI entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistcheckStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    BudgetExceeded = 5,
    InternalError = 6,
}

/// Opaque handle to a validated unitary + partition + initial state.
pub struct HistcheckBundle {
    bundle: Bundle,
    cfg: GramConfig,
}

fn report_out(report: &CheckReport, out: *mut *mut c_char) -> HistcheckStatus {
    let json = match serde_json::to_string(report) {
        Ok(j) => j,
        Err(_) => return HistcheckStatus::InternalError,
    };
    match CString::new(json) {
        Ok(s) => {
            unsafe { *out = s.into_raw() };
            HistcheckStatus::Ok
        }
        Err(_) => HistcheckStatus::InternalError,
    }
}

fn criteria_status(e: &CriteriaError) -> HistcheckStatus {
    match e {
        CriteriaError::Histories(HistoriesError::BudgetExceeded { .. }) => {
            HistcheckStatus::BudgetExceeded
        }
        CriteriaError::InvalidEpsilon(_) => HistcheckStatus::InvalidArgument,
        _ => HistcheckStatus::InternalError,
    }
}

/// Parses and validates a bundle JSON document.
///
/// On success writes a new handle to `out`; release it with
/// `histcheck_bundle_free`.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn histcheck_bundle_parse(
    json: *const c_char,
    tol: f64,
    out: *mut *mut HistcheckBundle,
) -> HistcheckStatus {
    if json.is_null() || out.is_null() {
        return HistcheckStatus::NullPointer;
    }
    *out = ptr::null_mut();
    let text = match CStr::from_ptr(json).to_str() {
        Ok(t) => t,
        Err(_) => return HistcheckStatus::InvalidUtf8,
    };
    let tol = if tol > 0.0 { tol } else { DEFAULT_TOL };
    match parse_bundle(text, tol) {
        Ok(bundle) => {
            let handle = Box::new(HistcheckBundle {
                bundle,
                cfg: GramConfig::default(),
            });
            *out = Box::into_raw(handle);
            HistcheckStatus::Ok
        }
        Err(_) => HistcheckStatus::ParseError,
    }
}

/// Releases a bundle handle. Passing NULL is a no-op.
///
/// # Safety
/// `handle` must come from `histcheck_bundle_parse` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn histcheck_bundle_free(handle: *mut HistcheckBundle) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Overrides the history-count budget (m^k cap) of a handle.
///
/// # Safety
/// `handle` must be a live bundle handle.
#[no_mangle]
pub unsafe extern "C" fn histcheck_bundle_set_budget(
    handle: *mut HistcheckBundle,
    budget: usize,
) -> HistcheckStatus {
    if handle.is_null() {
        return HistcheckStatus::NullPointer;
    }
    (*handle).cfg.budget = budget;
    HistcheckStatus::Ok
}

/// Exact medium decoherence at history length `k`; writes a JSON report.
///
/// # Safety
/// `handle` must be a live bundle handle and `out_report` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn histcheck_check_exact(
    handle: *const HistcheckBundle,
    k: usize,
    tol: f64,
    out_report: *mut *mut c_char,
) -> HistcheckStatus {
    if handle.is_null() || out_report.is_null() {
        return HistcheckStatus::NullPointer;
    }
    if k == 0 {
        return HistcheckStatus::InvalidArgument;
    }
    let h = &*handle;
    match check_exact(&h.bundle.unitary, &h.bundle.partition, &h.bundle.rho, k, tol, &h.cfg) {
        Ok(report) => report_out(&report, out_report),
        Err(e) => criteria_status(&e),
    }
}

/// Approximate decoherence. `mode`: 0 = |D| condition, 1 = |Re D| variant,
/// 2 = strong condition (divided by the history count).
///
/// # Safety
/// `handle` must be a live bundle handle and `out_report` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn histcheck_check_approx(
    handle: *const HistcheckBundle,
    k: usize,
    eps: f64,
    mode: i32,
    out_report: *mut *mut c_char,
) -> HistcheckStatus {
    if handle.is_null() || out_report.is_null() {
        return HistcheckStatus::NullPointer;
    }
    if k == 0 {
        return HistcheckStatus::InvalidArgument;
    }
    let eps = match Epsilon::new(eps) {
        Ok(e) => e,
        Err(_) => return HistcheckStatus::InvalidArgument,
    };
    let h = &*handle;
    let (u, p, rho) = (&h.bundle.unitary, &h.bundle.partition, &h.bundle.rho);
    let result = match mode {
        0 => check_approx_dh(u, p, rho, k, eps, false, DEFAULT_P_NULL, &h.cfg),
        1 => check_approx_dh(u, p, rho, k, eps, true, DEFAULT_P_NULL, &h.cfg),
        2 => check_approx_strong(u, p, rho, k, eps, DEFAULT_P_NULL, &h.cfg),
        _ => return HistcheckStatus::InvalidArgument,
    };
    match result {
        Ok(report) => report_out(&report, out_report),
        Err(e) => criteria_status(&e),
    }
}

/// Iterated commutator condition up to horizon `n_max`.
///
/// # Safety
/// `handle` must be a live bundle handle and `out_report` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn histcheck_check_commutators(
    handle: *const HistcheckBundle,
    n_max: usize,
    tol: f64,
    out_report: *mut *mut c_char,
) -> HistcheckStatus {
    if handle.is_null() || out_report.is_null() {
        return HistcheckStatus::NullPointer;
    }
    if n_max == 0 {
        return HistcheckStatus::InvalidArgument;
    }
    let h = &*handle;
    let report = check_commutators(&h.bundle.unitary, &h.bundle.partition, n_max, tol);
    report_out(&report, out_report)
}

/// Commutator norm bound 2 d^{3/2} sqrt(eps) up to horizon `n_max`.
///
/// # Safety
/// `handle` must be a live bundle handle and `out_report` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn histcheck_check_theorem2_bound(
    handle: *const HistcheckBundle,
    n_max: usize,
    eps: f64,
    out_report: *mut *mut c_char,
) -> HistcheckStatus {
    if handle.is_null() || out_report.is_null() {
        return HistcheckStatus::NullPointer;
    }
    if n_max == 0 {
        return HistcheckStatus::InvalidArgument;
    }
    let eps = match Epsilon::new(eps) {
        Ok(e) => e,
        Err(_) => return HistcheckStatus::InvalidArgument,
    };
    let h = &*handle;
    let report = check_theorem2_bound(&h.bundle.unitary, &h.bundle.partition, n_max, eps);
    report_out(&report, out_report)
}

/// Releases a report string returned by any check. NULL is a no-op.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn histcheck_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
