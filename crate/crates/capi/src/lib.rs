//! C ABI over the calabiflow laboratory: opaque field handles, flat status
//! codes, and JSON-in/JSON-out flow runs, so other languages can bind
//! without touching Rust types.
//!
//! Conventions:
//! * every function is panic-safe; panics surface as `CF_STATUS_INTERNAL`;
//! * functions returning pointers yield null on failure;
//! * `cf_last_error_message` returns a thread-local description of the most
//!   recent failure (valid until the next failing call on that thread);
//! * strings returned through out-parameters are released with
//!   `cf_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use calabiflow::error::Error;
use calabiflow::flow::{self, FlowConfig};
use calabiflow::functionals;
use calabiflow::fubini_study::{self, FsProbe};
use calabiflow::geometry::{GeometryConfig, PotentialField};

/// Status codes shared by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CfStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    NotKahler = 3,
    InsufficientData = 4,
    QuadratureFailed = 5,
    Io = 6,
    Internal = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let cleaned: String = msg.chars().filter(|c| *c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(cleaned).unwrap());
}

fn status_of(err: &Error) -> CfStatus {
    match err {
        Error::NotKahler { .. } | Error::NotConvex { .. } | Error::StepFailure { .. } => {
            CfStatus::NotKahler
        }
        Error::InsufficientData { .. } => CfStatus::InsufficientData,
        Error::QuadratureNotConverged { .. } => CfStatus::QuadratureFailed,
        Error::Io(_) => CfStatus::Io,
        _ => CfStatus::InvalidArgument,
    }
}

fn fail(err: &Error) -> CfStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn guarded<F: FnOnce() -> CfStatus>(f: F) -> CfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            CfStatus::Internal
        }
    }
}

/// Opaque chart potential handle.
pub struct CfField {
    inner: PotentialField,
}

/// Flat mirror of the functional report.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct CfFunctionalReport {
    pub aubin_i: f64,
    pub energy_e: f64,
    pub mabuchi: f64,
    pub calabi_energy: f64,
    pub s_hat: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub sup_e: f64,
    pub sup_s_dev: f64,
}

/// Crate version as a static C string.
#[no_mangle]
pub extern "C" fn cf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing the most recent failure on this thread.
#[no_mangle]
pub extern "C" fn cf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// New zero potential on an n-by-n periodic chart; null on invalid geometry.
#[no_mangle]
pub extern "C" fn cf_field_new_torus(grid_n: usize, period: f64) -> *mut CfField {
    let build = || -> Result<*mut CfField, Error> {
        let geometry = GeometryConfig::torus(grid_n, period)?;
        let inner = PotentialField::zero(geometry)?;
        Ok(Box::into_raw(Box::new(CfField { inner })))
    };
    match catch_unwind(build) {
        Ok(Ok(ptr)) => ptr,
        Ok(Err(e)) => {
            fail(&e);
            std::ptr::null_mut()
        }
        Err(_) => {
            set_error("internal panic");
            std::ptr::null_mut()
        }
    }
}

/// Load a torus field file (see the field-file JSON schema); null on error.
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cf_field_load_json(path: *const c_char) -> *mut CfField {
    if path.is_null() {
        set_error("null path");
        return std::ptr::null_mut();
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(p) => p.to_owned(),
        Err(_) => {
            set_error("path is not valid UTF-8");
            return std::ptr::null_mut();
        }
    };
    let build = move || -> Result<*mut CfField, Error> {
        match calabiflow::io::load_field(&path)? {
            calabiflow::io::LoadedField::Torus(inner) => {
                Ok(Box::into_raw(Box::new(CfField { inner })))
            }
            calabiflow::io::LoadedField::Toric(_) => Err(Error::BackendMismatch {
                expected: "torus",
            }),
        }
    };
    match catch_unwind(build) {
        Ok(Ok(ptr)) => ptr,
        Ok(Err(e)) => {
            fail(&e);
            std::ptr::null_mut()
        }
        Err(_) => {
            set_error("internal panic");
            std::ptr::null_mut()
        }
    }
}

/// Release a field handle (null is a no-op).
///
/// # Safety
/// `field` must have come from this library and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn cf_field_free(field: *mut CfField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of grid samples held by the field.
///
/// # Safety
/// `field` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cf_field_len(field: *const CfField) -> usize {
    if field.is_null() {
        return 0;
    }
    (*field).inner.values().len()
}

/// Overwrite the potential samples (row-major, length must match).
///
/// # Safety
/// `values` must point to `len` readable doubles; `field` must be live.
#[no_mangle]
pub unsafe extern "C" fn cf_field_set_values(
    field: *mut CfField,
    values: *const f64,
    len: usize,
) -> CfStatus {
    if field.is_null() || values.is_null() {
        set_error("null argument");
        return CfStatus::NullArgument;
    }
    let slice = std::slice::from_raw_parts(values, len);
    guarded(|| {
        let handle = &mut *field;
        match PotentialField::new(*handle.inner.geometry(), slice.to_vec()) {
            Ok(inner) => {
                handle.inner = inner;
                CfStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Copy the potential samples out (row-major, `len` must match).
///
/// # Safety
/// `out` must point to `len` writable doubles; `field` must be live.
#[no_mangle]
pub unsafe extern "C" fn cf_field_get_values(
    field: *const CfField,
    out: *mut f64,
    len: usize,
) -> CfStatus {
    if field.is_null() || out.is_null() {
        set_error("null argument");
        return CfStatus::NullArgument;
    }
    let values = (*field).inner.values();
    if values.len() != len {
        set_error("length mismatch");
        return CfStatus::InvalidArgument;
    }
    std::ptr::copy_nonoverlapping(values.as_ptr(), out, len);
    CfStatus::Ok
}

/// Full functional report of a field (Mabuchi slot is 0 for single fields).
///
/// # Safety
/// `field` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_functionals_eval(
    field: *const CfField,
    out: *mut CfFunctionalReport,
) -> CfStatus {
    if field.is_null() || out.is_null() {
        set_error("null argument");
        return CfStatus::NullArgument;
    }
    guarded(|| match functionals::functional_report(&(*field).inner, 0.0) {
        Ok(r) => {
            *out = CfFunctionalReport {
                aubin_i: r.aubin_i,
                energy_e: r.energy_e,
                mabuchi: r.mabuchi,
                calabi_energy: r.calabi_energy,
                s_hat: r.s_hat,
                min_u: r.min_u,
                max_u: r.max_u,
                sup_e: r.sup_e,
                sup_s_dev: r.sup_s_dev,
            };
            CfStatus::Ok
        }
        Err(e) => fail(&e),
    })
}

/// Integrate the flow described by a JSON config (the CLI schema) and hand
/// back the trajectory summary as a JSON string via `summary_out`.
///
/// # Safety
/// `config_json` must be NUL-terminated; `summary_out`, when non-null,
/// receives a string to release with `cf_string_free`.
#[no_mangle]
pub unsafe extern "C" fn cf_flow_run_json(
    config_json: *const c_char,
    summary_out: *mut *mut c_char,
) -> CfStatus {
    if config_json.is_null() {
        set_error("null config");
        return CfStatus::NullArgument;
    }
    let text = match CStr::from_ptr(config_json).to_str() {
        Ok(t) => t.to_owned(),
        Err(_) => {
            set_error("config is not valid UTF-8");
            return CfStatus::InvalidArgument;
        }
    };
    guarded(move || {
        let config: FlowConfig = match serde_json::from_str(&text) {
            Ok(c) => c,
            Err(e) => return fail(&Error::from(e)),
        };
        if let Err(e) = config.validate() {
            return fail(&e);
        }
        let trajectory = match flow::run(&config) {
            Ok(t) => t,
            Err(e) => return fail(&e),
        };
        let summary = serde_json::json!({
            "terminal_status": trajectory.terminal_status,
            "records": trajectory.records.len(),
            "final_report": trajectory.final_record().map(|r| r.report),
            "decay": flow::fit_decay(&trajectory, 0.5).ok(),
        });
        if !summary_out.is_null() {
            let s = CString::new(summary.to_string()).expect("no NUL in JSON");
            *summary_out = s.into_raw();
        }
        match trajectory.terminal_status {
            flow::TerminalStatus::Converged | flow::TerminalStatus::TMaxReached => CfStatus::Ok,
            _ => {
                set_error("flow left the Kähler cone or the step cascade failed");
                CfStatus::NotKahler
            }
        }
    })
}

/// Release a string produced by this library (null is a no-op).
///
/// # Safety
/// `s` must have come from this library and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn cf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Least-squares exponential decay rate of a `(t, value)` series tail.
///
/// # Safety
/// `ts` and `values` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn cf_fit_decay(
    ts: *const f64,
    values: *const f64,
    len: usize,
    tail_fraction: f64,
    rate_out: *mut f64,
    r_squared_out: *mut f64,
) -> CfStatus {
    if ts.is_null() || values.is_null() || rate_out.is_null() || r_squared_out.is_null() {
        set_error("null argument");
        return CfStatus::NullArgument;
    }
    let series: Vec<(f64, f64)> = std::slice::from_raw_parts(ts, len)
        .iter()
        .zip(std::slice::from_raw_parts(values, len))
        .map(|(&t, &v)| (t, v))
        .collect();
    guarded(|| match flow::fit_decay_series(&series, tail_fraction) {
        Ok(fit) => {
            *rate_out = fit.rate;
            *r_squared_out = fit.r_squared;
            CfStatus::Ok
        }
        Err(e) => fail(&e),
    })
}

/// The radial L^p gradient integral of the scaled round-metric family.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_lp_gradient_norm(lambda: f64, p: f64, out: *mut f64) -> CfStatus {
    if out.is_null() {
        set_error("null argument");
        return CfStatus::NullArgument;
    }
    guarded(|| {
        let probe = match FsProbe::new(lambda, p) {
            Ok(pr) => pr,
            Err(e) => return fail(&e),
        };
        match fubini_study::lp_gradient_norm(&probe) {
            Ok(v) => {
                *out = v;
                CfStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// The p < 2 majorant bound; `CF_STATUS_INVALID_ARGUMENT` when divergent.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_lp_upper_bound(p: f64, out: *mut f64) -> CfStatus {
    if out.is_null() {
        set_error("null argument");
        return CfStatus::NullArgument;
    }
    guarded(|| match fubini_study::lp_upper_bound(p) {
        Ok(v) => {
            *out = v;
            CfStatus::Ok
        }
        Err(e) => fail(&e),
    })
}
