use std::ffi::{CStr, CString};
use std::ptr;

use oobe_mc_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = oobe_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take_string(p: *mut std::ffi::c_char) -> String {
    assert!(!p.is_null());
    let s = CStr::from_ptr(p).to_string_lossy().into_owned();
    oobe_string_free(p);
    s
}

unsafe fn scenario(json: &str) -> *mut OobeScenario {
    let mut s = ptr::null_mut();
    assert_eq!(oobe_scenario_from_json(c(json).as_ptr(), &mut s), OobeStatus::Ok);
    s
}

unsafe fn run(s: *const OobeScenario) -> *mut OobeRun {
    let mut r = ptr::null_mut();
    assert_eq!(oobe_run(s, 2, &mut r), OobeStatus::Ok, "{}", last_error());
    r
}

#[test]
fn run_round_trip() {
    unsafe {
        let s = scenario(r#"{ "trials": 40, "master_seed": 5, "threshold_dbm": -200.0 }"#);
        let r = run(s);
        assert_eq!(oobe_run_trial_count(r), 40);

        let mut rec = OobeTrialRecord::default();
        assert_eq!(oobe_run_trial(r, 3, &mut rec), OobeStatus::Ok);
        assert_eq!(rec.trial_index, 3);
        assert!(rec.rep_down_dbm == f64::NEG_INFINITY);
        let total = 10f64.powf(rec.down_dbm / 10.0) + 10f64.powf(rec.up_dbm / 10.0);
        assert!((10.0 * total.log10() - rec.combined_dbm).abs() < 1e-9);

        assert_eq!(oobe_run_trial(r, 40, &mut rec), OobeStatus::InvalidArgument);
        assert!(last_error().contains("out of range"));

        let mut mean = 0.0;
        assert_eq!(oobe_run_metric_mean_dbm(r, OobeMetric::Combined, &mut mean), OobeStatus::Ok);
        assert!(mean.is_finite());

        let mut ex = 0.0;
        assert_eq!(oobe_run_exceedance(r, &mut ex), OobeStatus::Ok);
        assert_eq!(ex, 1.0);

        let manifest = take_string(oobe_run_manifest_json(r));
        let v: serde_json::Value = serde_json::from_str(&manifest).unwrap();
        assert_eq!(v["master_seed"], 5);

        let dir = tempfile::tempdir().unwrap();
        let d = c(dir.path().to_str().unwrap());
        assert_eq!(oobe_run_write_outputs(r, d.as_ptr(), true), OobeStatus::Ok);
        assert!(dir.path().join("trials.csv").exists());
        assert!(dir.path().join("cdf.csv").exists());

        oobe_run_free(r);
        oobe_scenario_free(s);
    }
}

#[test]
fn no_threshold_means_no_exceedance() {
    unsafe {
        let s = scenario(r#"{ "trials": 5 }"#);
        let r = run(s);
        let mut ex = 0.0;
        assert_eq!(oobe_run_exceedance(r, &mut ex), OobeStatus::InvalidArgument);
        oobe_run_free(r);
        oobe_scenario_free(s);
    }
}

#[test]
fn config_errors_name_the_field() {
    unsafe {
        let mut s = ptr::null_mut();
        let st = oobe_scenario_from_json(c(r#"{ "network_loading": 1.5 }"#).as_ptr(), &mut s);
        assert_eq!(st, OobeStatus::Config);
        assert!(s.is_null());
        assert!(last_error().contains("network_loading"));

        let st = oobe_scenario_from_json(c(r#"{ "surprise": 1 }"#).as_ptr(), &mut s);
        assert_eq!(st, OobeStatus::Config);

        let missing = c("/definitely/not/here.json");
        assert_eq!(oobe_scenario_from_file(missing.as_ptr(), &mut s), OobeStatus::Io);
    }
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(oobe_scenario_from_json(ptr::null(), &mut s), OobeStatus::NullPointer);
        assert_eq!(oobe_run(ptr::null(), 0, ptr::null_mut()), OobeStatus::NullPointer);
        assert_eq!(oobe_fspl_db(23.8e9, 1.0, ptr::null_mut()), OobeStatus::NullPointer);
        assert!(oobe_scenario_to_json(ptr::null()).is_null());
        assert_eq!(oobe_run_trial_count(ptr::null()), 0);
        oobe_scenario_free(ptr::null_mut());
        oobe_run_free(ptr::null_mut());
        oobe_string_free(ptr::null_mut());
    }
}

#[test]
fn set_and_hash() {
    unsafe {
        let s = scenario("{}");
        let before = take_string(oobe_scenario_hash(s));
        assert_eq!(
            oobe_scenario_set(s, c("repeater_factor_f").as_ptr(), c("2").as_ptr()),
            OobeStatus::Ok
        );
        let after = take_string(oobe_scenario_hash(s));
        assert_ne!(before, after);
        assert_eq!(after.len(), 64);

        // a rejected override leaves the scenario as it was
        assert_eq!(
            oobe_scenario_set(s, c("network_loading").as_ptr(), c("7").as_ptr()),
            OobeStatus::Config
        );
        assert_eq!(take_string(oobe_scenario_hash(s)), after);

        let json = take_string(oobe_scenario_to_json(s));
        let mut t = ptr::null_mut();
        assert_eq!(oobe_scenario_from_json(c(&json).as_ptr(), &mut t), OobeStatus::Ok);
        assert_eq!(take_string(oobe_scenario_hash(t)), after);
        oobe_scenario_free(t);
        oobe_scenario_free(s);
    }
}

#[test]
fn paired_penalty() {
    unsafe {
        let a = scenario(r#"{ "trials": 300, "master_seed": 11 }"#);
        let b = scenario(r#"{ "trials": 300, "master_seed": 11, "repeater_factor_f": 1 }"#);
        let stray = scenario(r#"{ "trials": 300, "master_seed": 12, "repeater_factor_f": 1 }"#);
        let (ra, rb, rs) = (run(a), run(b), run(stray));
        let knob = c("repeater_factor_f");

        let mut p = 0.0;
        assert_eq!(
            oobe_penalty_empirical(ra, rb, knob.as_ptr(), OobeMetric::Down, &mut p),
            OobeStatus::Ok
        );
        assert!((p - oobe_penalty_closed_form_db(1)).abs() < 0.3, "{p}");

        let mut report = ptr::null_mut();
        assert_eq!(oobe_compare_json(ra, rb, knob.as_ptr(), &mut report), OobeStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take_string(report)).unwrap();
        assert_eq!(v["knob"], "repeater_factor_f");

        assert_eq!(
            oobe_penalty_empirical(ra, rs, knob.as_ptr(), OobeMetric::Down, &mut p),
            OobeStatus::Pairing
        );
        assert!(last_error().contains("master_seed"));

        for r in [ra, rb, rs] {
            oobe_run_free(r);
        }
        for s in [a, b, stray] {
            oobe_scenario_free(s);
        }
    }
}

#[test]
fn scalar_helpers() {
    unsafe {
        let mut v = 0.0;
        assert_eq!(oobe_fspl_db(23.8e9, 1.0, &mut v), OobeStatus::Ok);
        assert!((v - 119.98).abs() < 0.01);
        assert_eq!(oobe_fspl_db(23.8e9, -1.0, &mut v), OobeStatus::InvalidArgument);

        assert_eq!(oobe_bandwidth_rescale_dbm(-70.0, 10e3, 200e6, &mut v), OobeStatus::Ok);
        assert!((v + 26.99).abs() < 0.01);

        assert_eq!(oobe_slant_range_km(90.0, 824.0, &mut v), OobeStatus::Ok);
        assert_eq!(v, 824.0);

        assert_eq!(oobe_penalty_closed_form_db(0), 0.0);
        let ver = CStr::from_ptr(oobe_version()).to_str().unwrap();
        assert_eq!(ver, env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/oobe_mc.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() > 20);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "header lacks {name}");
    }
    for ty in ["typedef struct OobeScenario OobeScenario", "typedef struct OobeRun OobeRun", "OOBE_STATUS_PAIRING = 3"] {
        assert!(header.contains(ty), "header lacks {ty}");
    }
}
