//! C ABI over the diracsim scenarios.
//!
//! Configs and reports cross the boundary as opaque handles. Every call
//! returns a `DsStatus`; on failure the message is kept per thread and read
//! with `ds_last_error`. Strings handed out by the library are released with
//! `ds_string_free`, handles with their own `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use diracsim::config::{parse_config, parse_config_str, Backend, ScenarioConfig};
use diracsim::experiments::{run_scenario, Scenario};
use diracsim::report::Report;
use diracsim::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    InvalidParameter = 4,
    Numerical = 5,
    Io = 6,
    UnknownScenario = 7,
    NotFound = 8,
    Panic = 9,
}

/// Opaque scenario configuration.
pub struct DsConfig(ScenarioConfig);

/// Opaque scenario report.
pub struct DsReport(Report);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: DsStatus, message: impl Into<String>) -> DsStatus {
    set_error(message);
    status
}

fn status_of(err: &Error) -> DsStatus {
    match err {
        Error::Config { .. } => DsStatus::Config,
        Error::Io(_) => DsStatus::Io,
        Error::InvalidParameter { .. } | Error::InvalidModes(_) | Error::UnknownMode(_) => DsStatus::InvalidParameter,
        _ => DsStatus::Numerical,
    }
}

fn guard(body: impl FnOnce() -> DsStatus) -> DsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(DsStatus::Panic, "internal panic"),
    }
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, DsStatus> {
    if s.is_null() {
        return Err(fail(DsStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(DsStatus::InvalidUtf8, "string argument is not UTF-8"))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

unsafe fn store_config(cfg: diracsim::Result<ScenarioConfig>, out: *mut *mut DsConfig) -> DsStatus {
    match cfg {
        Ok(cfg) => {
            *out = Box::into_raw(Box::new(DsConfig(cfg)));
            DsStatus::Ok
        }
        Err(e) => fail(status_of(&e), e.to_string()),
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ds_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ds_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default configuration.
#[no_mangle]
pub extern "C" fn ds_config_default() -> *mut DsConfig {
    Box::into_raw(Box::new(DsConfig(ScenarioConfig::default())))
}

/// Parse `key = value` config text.
///
/// # Safety
/// `config_text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ds_config_parse(config_text: *const c_char, out: *mut *mut DsConfig) -> DsStatus {
    guard(|| {
        if out.is_null() {
            return fail(DsStatus::NullPointer, "null output handle");
        }
        match text(config_text) {
            Ok(s) => store_config(parse_config_str(s), out),
            Err(status) => status,
        }
    })
}

/// Load a config file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ds_config_load(path: *const c_char, out: *mut *mut DsConfig) -> DsStatus {
    guard(|| {
        if out.is_null() {
            return fail(DsStatus::NullPointer, "null output handle");
        }
        match text(path) {
            Ok(p) => store_config(parse_config(Path::new(p)), out),
            Err(status) => status,
        }
    })
}

/// Override the seed.
///
/// # Safety
/// `config` must come from this library and not yet be freed.
#[no_mangle]
pub unsafe extern "C" fn ds_config_set_seed(config: *mut DsConfig, seed: u64) -> DsStatus {
    match config.as_mut() {
        Some(c) => {
            c.0.seed = seed;
            DsStatus::Ok
        }
        None => fail(DsStatus::NullPointer, "null config"),
    }
}

/// Override the backend: "fock", "gaussian" or "both".
///
/// # Safety
/// `config` must come from this library; `backend` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ds_config_set_backend(config: *mut DsConfig, backend: *const c_char) -> DsStatus {
    guard(|| {
        let Some(c) = config.as_mut() else {
            return fail(DsStatus::NullPointer, "null config");
        };
        let name = match text(backend) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match Backend::parse(name) {
            Some(b) => {
                c.0.backend = b;
                DsStatus::Ok
            }
            None => fail(DsStatus::Config, format!("unknown backend `{name}`")),
        }
    })
}

/// Canonical text of the config. Release with `ds_string_free`.
///
/// # Safety
/// `config` must come from this library and not yet be freed.
#[no_mangle]
pub unsafe extern "C" fn ds_config_to_text(config: *const DsConfig) -> *mut c_char {
    match config.as_ref() {
        Some(c) => into_c_string(c.0.to_text()),
        None => {
            set_error("null config");
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `config` must come from this library, or be null.
#[no_mangle]
pub unsafe extern "C" fn ds_config_free(config: *mut DsConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Run a named scenario: baseline, gauge-heisenberg, gauge-schrodinger,
/// energy-heisenberg or equivalence.
///
/// # Safety
/// `config` must come from this library, `scenario` must be NUL-terminated
/// and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ds_run(config: *const DsConfig, scenario: *const c_char, out: *mut *mut DsReport) -> DsStatus {
    guard(|| {
        let Some(c) = config.as_ref() else {
            return fail(DsStatus::NullPointer, "null config");
        };
        if out.is_null() {
            return fail(DsStatus::NullPointer, "null output handle");
        }
        let name = match text(scenario) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let Some(scenario) = Scenario::parse(name) else {
            return fail(DsStatus::UnknownScenario, format!("unknown scenario `{name}`"));
        };
        match c.0.validate().and_then(|_| run_scenario(scenario, &c.0)) {
            Ok(report) => {
                *out = Box::into_raw(Box::new(DsReport(report)));
                DsStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Whether every check in the report passed.
///
/// # Safety
/// `report` must come from this library and `passed` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ds_report_passed(report: *const DsReport, passed: *mut bool) -> DsStatus {
    match (report.as_ref(), passed.is_null()) {
        (Some(r), false) => {
            *passed = r.0.passed();
            DsStatus::Ok
        }
        _ => fail(DsStatus::NullPointer, "null report or output"),
    }
}

/// Look up a named metric.
///
/// # Safety
/// `report` must come from this library, `name` must be NUL-terminated and
/// `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ds_report_metric(report: *const DsReport, name: *const c_char, value: *mut f64) -> DsStatus {
    guard(|| {
        let Some(r) = report.as_ref() else {
            return fail(DsStatus::NullPointer, "null report");
        };
        if value.is_null() {
            return fail(DsStatus::NullPointer, "null output");
        }
        let key = match text(name) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match r.0.metrics.get(key) {
            Some(v) => {
                *value = *v;
                DsStatus::Ok
            }
            None => fail(DsStatus::NotFound, format!("no metric `{key}`")),
        }
    })
}

/// Report as JSON. Release with `ds_string_free`.
///
/// # Safety
/// `report` must come from this library and not yet be freed.
#[no_mangle]
pub unsafe extern "C" fn ds_report_json(report: *const DsReport) -> *mut c_char {
    match report.as_ref() {
        Some(r) => into_c_string(r.0.to_json()),
        None => {
            set_error("null report");
            ptr::null_mut()
        }
    }
}

/// Series table as CSV. Release with `ds_string_free`.
///
/// # Safety
/// `report` must come from this library and not yet be freed.
#[no_mangle]
pub unsafe extern "C" fn ds_report_csv(report: *const DsReport) -> *mut c_char {
    match report.as_ref() {
        Some(r) => into_c_string(r.0.to_csv()),
        None => {
            set_error("null report");
            ptr::null_mut()
        }
    }
}

/// Write `<scenario>_series.csv` and `<scenario>_report.json` into `dir`.
///
/// # Safety
/// `report` must come from this library; `dir` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ds_report_write(report: *const DsReport, dir: *const c_char) -> DsStatus {
    guard(|| {
        let Some(r) = report.as_ref() else {
            return fail(DsStatus::NullPointer, "null report");
        };
        let dir = match text(dir) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match r.0.write(Path::new(dir)) {
            Ok(_) => DsStatus::Ok,
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `report` must come from this library, or be null.
#[no_mangle]
pub unsafe extern "C" fn ds_report_free(report: *mut DsReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must be a string returned by this library, or null.
#[no_mangle]
pub unsafe extern "C" fn ds_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
