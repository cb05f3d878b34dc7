//! C interface to the `qsmc` simulator.
//!
//! Every function returns a [`QsmcStatus`]. On failure a message is kept per
//! thread and can be read with [`qsmc_last_error_message`] until the next
//! failing call on that thread. Handles are opaque and must be released with
//! their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use qsmc::quat::{UnitQuaternion, Vec3};
use qsmc::sim::{
    compute_metrics, emit_csv, parse_config, scenario_from_config, verify, ConfigError, ConfigMap, RunLog, Scenario,
    SimError,
};
use qsmc::sliding::{s_proposed, SlidingConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QsmcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Divergence = 4,
    Io = 5,
    OutOfRange = 6,
    VerifyFailed = 7,
    Panic = 8,
}

/// Scenario built from a preset or config text; keys can be overridden.
pub struct QsmcScenario {
    map: ConfigMap,
    scenario: Scenario,
}

pub struct QsmcRunLog {
    log: RunLog,
}

/// One logged sample. Quaternions are `(w, x, y, z)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QsmcRow {
    pub t: f64,
    pub q: [f64; 4],
    pub q_d: [f64; 4],
    pub omega: [f64; 3],
    pub q_e: [f64; 4],
    pub omega_e: [f64; 3],
    pub s: [f64; 3],
    pub torque: [f64; 3],
    pub branch: i8,
}

/// Run summary; `inf` marks a threshold never reached and `NaN` a field
/// that does not apply to the controller.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QsmcMetrics {
    pub settling_time: f64,
    pub steady_state_s_max: f64,
    pub peak_effort: f64,
    pub integral_effort: f64,
    pub unwinding_ratio: f64,
    pub manifold_switches: u64,
    pub layer_hit_time: f64,
    pub layer_exits: u64,
    pub max_torque_jump: f64,
    pub min_estimate_eigenvalue: f64,
    pub max_lyapunov_increase: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: QsmcStatus, msg: impl Into<String>) -> QsmcStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> QsmcStatus) -> QsmcStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(QsmcStatus::Panic, "internal panic"))
}

fn sim_status(e: &SimError) -> QsmcStatus {
    match e {
        SimError::Config(_) | SimError::Invalid(_) | SimError::Gains(_) => QsmcStatus::Config,
        SimError::Io(_) => QsmcStatus::Io,
        _ => QsmcStatus::Divergence,
    }
}

/// # Safety
/// `s` must be null or a valid nul-terminated string.
unsafe fn c_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, QsmcStatus> {
    if s.is_null() {
        return Err(fail(QsmcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(QsmcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn build(map: ConfigMap) -> Result<Box<QsmcScenario>, QsmcStatus> {
    let scenario = scenario_from_config(&map).map_err(|e: ConfigError| fail(QsmcStatus::Config, e.to_string()))?;
    Ok(Box::new(QsmcScenario { map, scenario }))
}

/// Message for the last failing call on this thread; empty if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qsmc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `name` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qsmc_scenario_preset(name: *const c_char, out: *mut *mut QsmcScenario) -> QsmcStatus {
    guard(|| {
        if out.is_null() {
            return fail(QsmcStatus::NullPointer, "out is null");
        }
        let name = match c_str(name, "name") {
            Ok(n) => n,
            Err(s) => return s,
        };
        let mut map = ConfigMap::default();
        map.set("preset", name).expect("known key");
        match build(map) {
            Ok(h) => {
                *out = Box::into_raw(h);
                QsmcStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// Parses `key = value` config text.
///
/// # Safety
/// `text` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qsmc_scenario_from_config(text: *const c_char, out: *mut *mut QsmcScenario) -> QsmcStatus {
    guard(|| {
        if out.is_null() {
            return fail(QsmcStatus::NullPointer, "out is null");
        }
        let text = match c_str(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let built = parse_config(text)
            .map_err(|e| fail(QsmcStatus::Config, e.to_string()))
            .and_then(build);
        match built {
            Ok(h) => {
                *out = Box::into_raw(h);
                QsmcStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// Overrides one config key, e.g. `("sim.dt", "5e-4")`. The scenario is left
/// unchanged if the result does not validate.
///
/// # Safety
/// `scenario` must come from this library; strings must be nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn qsmc_scenario_set(
    scenario: *mut QsmcScenario,
    key: *const c_char,
    value: *const c_char,
) -> QsmcStatus {
    guard(|| {
        let Some(h) = scenario.as_mut() else {
            return fail(QsmcStatus::NullPointer, "scenario is null");
        };
        let (key, value) = match (c_str(key, "key"), c_str(value, "value")) {
            (Ok(k), Ok(v)) => (k, v),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let mut map = h.map.clone();
        if let Err(e) = map.set(key, value) {
            return fail(QsmcStatus::Config, e.to_string());
        }
        match build(map) {
            Ok(next) => {
                *h = *next;
                QsmcStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// Number of integration steps the scenario will take.
///
/// # Safety
/// `scenario` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn qsmc_scenario_steps(scenario: *const QsmcScenario) -> u64 {
    scenario.as_ref().map_or(0, |h| h.scenario.steps() as u64)
}

/// # Safety
/// `scenario` must come from this library or be null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn qsmc_scenario_free(scenario: *mut QsmcScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qsmc_run(scenario: *const QsmcScenario, out: *mut *mut QsmcRunLog) -> QsmcStatus {
    guard(|| {
        let Some(h) = scenario.as_ref() else {
            return fail(QsmcStatus::NullPointer, "scenario is null");
        };
        if out.is_null() {
            return fail(QsmcStatus::NullPointer, "out is null");
        }
        match qsmc::sim::run_scenario(&h.scenario) {
            Ok(log) => {
                *out = Box::into_raw(Box::new(QsmcRunLog { log }));
                QsmcStatus::Ok
            }
            Err(e) => fail(sim_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `log` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn qsmc_runlog_len(log: *const QsmcRunLog) -> usize {
    log.as_ref().map_or(0, |h| h.log.rows.len())
}

/// # Safety
/// `log` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qsmc_runlog_row(log: *const QsmcRunLog, index: usize, out: *mut QsmcRow) -> QsmcStatus {
    guard(|| {
        let (Some(h), Some(out)) = (log.as_ref(), out.as_mut()) else {
            return fail(QsmcStatus::NullPointer, "log or out is null");
        };
        let Some(r) = h.log.rows.get(index) else {
            return fail(
                QsmcStatus::OutOfRange,
                format!("row {index} of {}", h.log.rows.len()),
            );
        };
        let v3 = |v: &Vec3| [v.x, v.y, v.z];
        *out = QsmcRow {
            t: r.t,
            q: r.q.to_array(),
            q_d: r.q_d.to_array(),
            omega: v3(&r.omega),
            q_e: r.q_e.to_array(),
            omega_e: v3(&r.omega_e),
            s: v3(&r.s),
            torque: v3(&r.torque),
            branch: r.branch,
        };
        QsmcStatus::Ok
    })
}

/// # Safety
/// `log` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qsmc_runlog_metrics(log: *const QsmcRunLog, out: *mut QsmcMetrics) -> QsmcStatus {
    guard(|| {
        let (Some(h), Some(out)) = (log.as_ref(), out.as_mut()) else {
            return fail(QsmcStatus::NullPointer, "log or out is null");
        };
        let m = compute_metrics(&h.log);
        *out = QsmcMetrics {
            settling_time: m.settling_time,
            steady_state_s_max: m.steady_state_s_max,
            peak_effort: m.peak_effort,
            integral_effort: m.integral_effort,
            unwinding_ratio: m.unwinding_ratio,
            manifold_switches: m.manifold_switches as u64,
            layer_hit_time: m.layer_hit_time,
            layer_exits: m.layer_exits as u64,
            max_torque_jump: m.max_torque_jump,
            min_estimate_eigenvalue: m.min_estimate_eigenvalue,
            max_lyapunov_increase: m.max_lyapunov_increase,
        };
        QsmcStatus::Ok
    })
}

/// # Safety
/// `log` must come from this library and `path` be a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qsmc_runlog_write_csv(log: *const QsmcRunLog, path: *const c_char) -> QsmcStatus {
    guard(|| {
        let Some(h) = log.as_ref() else {
            return fail(QsmcStatus::NullPointer, "log is null");
        };
        let path = match c_str(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match emit_csv(&h.log, Path::new(path)) {
            Ok(()) => QsmcStatus::Ok,
            Err(e) => fail(QsmcStatus::Io, format!("{path}: {e}")),
        }
    })
}

/// # Safety
/// `log` must come from this library or be null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn qsmc_runlog_free(log: *mut QsmcRunLog) {
    if !log.is_null() {
        drop(Box::from_raw(log));
    }
}

/// Proposed sliding variable `s = ω_e + λ sgn₊(q_e°) q⃗_e`. `q_e` is
/// normalized; `branch` may be null.
///
/// # Safety
/// `q_e` must point to 4 doubles, `omega_e` and `s_out` to 3.
#[no_mangle]
pub unsafe extern "C" fn qsmc_sliding_variable(
    q_e: *const f64,
    omega_e: *const f64,
    lambda: f64,
    s_out: *mut f64,
    branch: *mut i8,
) -> QsmcStatus {
    guard(|| {
        if q_e.is_null() || omega_e.is_null() || s_out.is_null() {
            return fail(QsmcStatus::NullPointer, "q_e, omega_e or s_out is null");
        }
        let q = std::slice::from_raw_parts(q_e, 4);
        let w = std::slice::from_raw_parts(omega_e, 3);
        let q = match UnitQuaternion::new(q[0], q[1], q[2], q[3]) {
            Ok(q) => q,
            Err(e) => return fail(QsmcStatus::InvalidArgument, e.to_string()),
        };
        let cfg = match SlidingConfig::new(lambda) {
            Ok(c) => c,
            Err(e) => return fail(QsmcStatus::InvalidArgument, e.to_string()),
        };
        let v = s_proposed(&q, &Vec3::new(w[0], w[1], w[2]), &cfg);
        ptr::copy_nonoverlapping(v.s.as_ptr(), s_out, 3);
        if let Some(b) = branch.as_mut() {
            *b = v.branch;
        }
        QsmcStatus::Ok
    })
}

/// Runs the numerical oracle suite; `VerifyFailed` names the failing checks.
#[no_mangle]
pub extern "C" fn qsmc_verify() -> QsmcStatus {
    guard(|| {
        let report = verify();
        if report.passed {
            return QsmcStatus::Ok;
        }
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        fail(QsmcStatus::VerifyFailed, failed.join(", "))
    })
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn qsmc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
