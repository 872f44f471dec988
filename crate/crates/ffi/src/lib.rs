//! C ABI over the `oobe-mc` simulator.
//!
//! Handles are opaque: create them with the `*_new`/`*_from_*` functions,
//! release them with the matching `*_free`. Every fallible call returns an
//! [`OobeStatus`]; on failure [`oobe_last_error_message`] describes what went
//! wrong on the calling thread. Strings returned as `char *` are owned by the
//! caller and must be released with [`oobe_string_free`].
//!
//! dBm values of empty sums are reported as negative infinity.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use oobe_mc::aggregation::Metric;
use oobe_mc::runner::{self, RunOutput};
use oobe_mc::scenario::Scenario;
use oobe_mc::units::{bandwidth_rescale, DecibelPower};
use oobe_mc::Error;

/// Status codes. Values 2..=4 match the command line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OobeStatus {
    Ok = 0,
    InvalidArgument = 1,
    Config = 2,
    Pairing = 3,
    Io = 4,
    NullPointer = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OobeMetric {
    Gnb = 0,
    RepDown = 1,
    Ue = 2,
    RepUp = 3,
    Down = 4,
    Up = 5,
    Combined = 6,
}

impl From<OobeMetric> for Metric {
    fn from(m: OobeMetric) -> Metric {
        match m {
            OobeMetric::Gnb => Metric::Gnb,
            OobeMetric::RepDown => Metric::RepDown,
            OobeMetric::Ue => Metric::Ue,
            OobeMetric::RepUp => Metric::RepUp,
            OobeMetric::Down => Metric::Down,
            OobeMetric::Up => Metric::Up,
            OobeMetric::Combined => Metric::Combined,
        }
    }
}

/// One row of the per-trial table.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OobeTrialRecord {
    pub trial_index: u64,
    pub gnb_dbm: f64,
    pub rep_down_dbm: f64,
    pub ue_dbm: f64,
    pub rep_up_dbm: f64,
    pub down_dbm: f64,
    pub up_dbm: f64,
    pub combined_dbm: f64,
    pub n_gnb: u64,
    pub n_rep: u64,
    pub n_ue_active: u64,
}

/// Opaque scenario handle.
pub struct OobeScenario {
    inner: Scenario,
}

/// Opaque handle to a finished run.
pub struct OobeRun {
    inner: RunOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> OobeStatus {
    match e {
        Error::InvalidArgument(_) | Error::UnitMismatch(_) => OobeStatus::InvalidArgument,
        Error::Parse { .. } | Error::Config { .. } => OobeStatus::Config,
        Error::Pairing(_) => OobeStatus::Pairing,
        Error::Io { .. } => OobeStatus::Io,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

struct Failure(OobeStatus, String);

fn null(what: &str) -> Failure {
    Failure(OobeStatus::NullPointer, format!("{what} is NULL"))
}

/// Run `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OobeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            OobeStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            OobeStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(OobeStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn oobe_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn oobe_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oobe_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Scenario with every field at its default.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn oobe_scenario_default(out: *mut *mut OobeScenario) -> OobeStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(OobeScenario {
            inner: Scenario::default(),
        }));
        Ok(())
    })
}

/// Parse and validate a scenario from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oobe_scenario_from_json(json: *const c_char, out: *mut *mut OobeScenario) -> OobeStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let out = out_arg(out, "out")?;
        let inner = Scenario::from_json_str(text)?;
        *out = Box::into_raw(Box::new(OobeScenario { inner }));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oobe_scenario_from_file(path: *const c_char, out: *mut *mut OobeScenario) -> OobeStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let inner = Scenario::from_path(path)?;
        *out = Box::into_raw(Box::new(OobeScenario { inner }));
        Ok(())
    })
}

/// Replace one field, addressed by a dotted path, with a JSON literal.
/// The scenario is left untouched when the result fails validation.
///
/// # Safety
/// `scenario` must be a live handle; `path` and `json_value` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn oobe_scenario_set(
    scenario: *mut OobeScenario,
    path: *const c_char,
    json_value: *const c_char,
) -> OobeStatus {
    guard(|| {
        let scenario = out_arg(scenario, "scenario")?;
        let path = str_arg(path, "path")?;
        let raw = str_arg(json_value, "json_value")?;
        let value: serde_json::Value = serde_json::from_str(raw)
            .map_err(|e| Failure(OobeStatus::InvalidArgument, format!("json_value: {e}")))?;
        scenario.inner = scenario.inner.with_override(path, value)?;
        Ok(())
    })
}

/// Fully resolved scenario as JSON, or NULL on failure.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn oobe_scenario_to_json(scenario: *const OobeScenario) -> *mut c_char {
    match scenario.as_ref() {
        Some(s) => into_c_string(s.inner.canonical_json()),
        None => {
            set_last_error("scenario is NULL");
            ptr::null_mut()
        }
    }
}

/// SHA-256 of the resolved scenario, hex encoded, or NULL.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn oobe_scenario_hash(scenario: *const OobeScenario) -> *mut c_char {
    match scenario.as_ref() {
        Some(s) => into_c_string(s.inner.hash()),
        None => {
            set_last_error("scenario is NULL");
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `scenario` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oobe_scenario_free(scenario: *mut OobeScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Execute every trial. `threads = 0` picks the worker count automatically.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oobe_run(scenario: *const OobeScenario, threads: u32, out: *mut *mut OobeRun) -> OobeStatus {
    guard(|| {
        let scenario = handle(scenario, "scenario")?;
        let out = out_arg(out, "out")?;
        let inner = runner::run(&scenario.inner, threads as usize)?;
        *out = Box::into_raw(Box::new(OobeRun { inner }));
        Ok(())
    })
}

/// # Safety
/// `run` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn oobe_run_trial_count(run: *const OobeRun) -> u64 {
    run.as_ref().map_or(0, |r| r.inner.results.len() as u64)
}

/// # Safety
/// `run` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oobe_run_trial(run: *const OobeRun, index: u64, out: *mut OobeTrialRecord) -> OobeStatus {
    guard(|| {
        let run = handle(run, "run")?;
        let out = out_arg(out, "out")?;
        let r = run.inner.results.get(index as usize).ok_or_else(|| {
            Failure(
                OobeStatus::InvalidArgument,
                format!("trial {index} out of range (run has {})", run.inner.results.len()),
            )
        })?;
        *out = OobeTrialRecord {
            trial_index: r.trial_index,
            gnb_dbm: r.metric_dbm(Metric::Gnb),
            rep_down_dbm: r.metric_dbm(Metric::RepDown),
            ue_dbm: r.metric_dbm(Metric::Ue),
            rep_up_dbm: r.metric_dbm(Metric::RepUp),
            down_dbm: r.metric_dbm(Metric::Down),
            up_dbm: r.metric_dbm(Metric::Up),
            combined_dbm: r.metric_dbm(Metric::Combined),
            n_gnb: r.active.gnb as u64,
            n_rep: (r.active.repeater_down + r.active.repeater_up) as u64,
            n_ue_active: r.active.ue as u64,
        };
        Ok(())
    })
}

/// Mean of a metric over all trials (linear average), in dBm.
///
/// # Safety
/// `run` must be a live handle; `out_dbm` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oobe_run_metric_mean_dbm(run: *const OobeRun, metric: OobeMetric, out_dbm: *mut f64) -> OobeStatus {
    guard(|| {
        let run = handle(run, "run")?;
        let out = out_arg(out_dbm, "out_dbm")?;
        *out = run.inner.statistics().metric(metric.into()).mean_dbm;
        Ok(())
    })
}

/// Fraction of trials whose combined power exceeds the scenario threshold.
/// Fails with `InvalidArgument` when the scenario has no threshold.
///
/// # Safety
/// `run` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oobe_run_exceedance(run: *const OobeRun, out: *mut f64) -> OobeStatus {
    guard(|| {
        let run = handle(run, "run")?;
        let out = out_arg(out, "out")?;
        *out = run
            .inner
            .statistics()
            .exceedance
            .ok_or_else(|| Failure(OobeStatus::InvalidArgument, "scenario has no threshold_dbm".into()))?;
        Ok(())
    })
}

/// Run manifest as JSON, or NULL.
///
/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn oobe_run_manifest_json(run: *const OobeRun) -> *mut c_char {
    match run.as_ref() {
        Some(r) => into_c_string(runner::manifest_json(&r.inner.manifest)),
        None => {
            set_last_error("run is NULL");
            ptr::null_mut()
        }
    }
}

/// Write `trials.csv`, `manifest.json` and optionally `cdf.csv` into `dir`.
///
/// # Safety
/// `run` must be a live handle; `dir` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn oobe_run_write_outputs(run: *const OobeRun, dir: *const c_char, with_cdf: bool) -> OobeStatus {
    guard(|| {
        let run = handle(run, "run")?;
        let dir = str_arg(dir, "dir")?;
        runner::write_outputs(&run.inner, Path::new(dir), with_cdf)?;
        Ok(())
    })
}

/// # Safety
/// `run` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oobe_run_free(run: *mut OobeRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Mean-of-linear penalty of `variant` over `baseline` for one metric, in dB.
/// The runs must differ only in `knob`.
///
/// # Safety
/// Both runs must be live handles; `knob` NUL-terminated; `out_db` writable.
#[no_mangle]
pub unsafe extern "C" fn oobe_penalty_empirical(
    baseline: *const OobeRun,
    variant: *const OobeRun,
    knob: *const c_char,
    metric: OobeMetric,
    out_db: *mut f64,
) -> OobeStatus {
    guard(|| {
        let a = handle(baseline, "baseline")?;
        let b = handle(variant, "variant")?;
        let knob = str_arg(knob, "knob")?;
        let out = out_arg(out_db, "out_db")?;
        *out = runner::compare(&a.inner.manifest, &b.inner.manifest, knob)?.penalty(metric.into());
        Ok(())
    })
}

/// Full penalty report as JSON.
///
/// # Safety
/// Both runs must be live handles; `knob` NUL-terminated; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn oobe_compare_json(
    baseline: *const OobeRun,
    variant: *const OobeRun,
    knob: *const c_char,
    out_json: *mut *mut c_char,
) -> OobeStatus {
    guard(|| {
        let a = handle(baseline, "baseline")?;
        let b = handle(variant, "variant")?;
        let knob = str_arg(knob, "knob")?;
        let out = out_arg(out_json, "out_json")?;
        let report = runner::compare(&a.inner.manifest, &b.inner.manifest, knob)?;
        *out = into_c_string(serde_json::to_string(&report).expect("report serializes"));
        Ok(())
    })
}

/// `10·log10(1 + f)`.
#[no_mangle]
pub extern "C" fn oobe_penalty_closed_form_db(f: u32) -> f64 {
    oobe_mc::aggregation::penalty_closed_form(f).db()
}

/// Move an integrated power to another bandwidth assuming a flat spectrum.
///
/// # Safety
/// `out_dbm` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oobe_bandwidth_rescale_dbm(
    dbm: f64,
    from_bandwidth_hz: f64,
    to_bandwidth_hz: f64,
    out_dbm: *mut f64,
) -> OobeStatus {
    guard(|| {
        let out = out_arg(out_dbm, "out_dbm")?;
        let p = DecibelPower::new(dbm, from_bandwidth_hz)?;
        *out = bandwidth_rescale(p, to_bandwidth_hz)?.dbm();
        Ok(())
    })
}

/// Free-space path loss in dB.
///
/// # Safety
/// `out_db` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oobe_fspl_db(frequency_hz: f64, distance_km: f64, out_db: *mut f64) -> OobeStatus {
    guard(|| {
        let out = out_arg(out_db, "out_db")?;
        *out = oobe_mc::propagation::fspl(frequency_hz, distance_km)?.db();
        Ok(())
    })
}

/// # Safety
/// `out_km` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oobe_slant_range_km(elevation_deg: f64, altitude_km: f64, out_km: *mut f64) -> OobeStatus {
    guard(|| {
        let out = out_arg(out_km, "out_km")?;
        *out = oobe_mc::geometry::slant_range(elevation_deg, altitude_km)?;
        Ok(())
    })
}
