use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_oobe-mc");

fn oobe(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("OOBE_MC_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn baseline_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/baseline.json")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_into(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    oobe(&args)
}

fn without_timestamps(manifest: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(manifest).unwrap();
    let obj = v.as_object_mut().unwrap();
    obj.remove("started_at");
    obj.remove("finished_at");
    v.to_string()
}

#[test]
fn run_writes_csv_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = run_into(&baseline_config(), &out, &["--trials", "50", "--cdf"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let csv = fs::read_to_string(out.join("trials.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "trial,gnb_dbm,rep_down_dbm,ue_dbm,rep_up_dbm,down_dbm,up_dbm,combined_dbm,n_gnb,n_rep,n_ue_active"
    );
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 50);
    let gnb = rows[0].split(',').nth(1).unwrap();
    assert_eq!(gnb.split('.').nth(1).map(str::len), Some(4), "four decimals: {gnb}");
    // no repeaters in the baseline, so their column is an empty sum
    assert_eq!(rows[0].split(',').nth(2).unwrap(), "-inf");

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 1);
    assert_eq!(manifest["scenario"]["trials"], 50);
    assert!(manifest["scenario_sha256"].as_str().unwrap().len() == 64);

    let cdf = fs::read_to_string(out.join("cdf.csv")).unwrap();
    assert!(cdf.starts_with("dbm,cdf\n"));
}

#[test]
fn same_seed_reproduces_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(code(&run_into(&baseline_config(), out, &["--trials", "80", "--seed", "31"])), 0);
    }
    assert_eq!(fs::read(a.join("trials.csv")).unwrap(), fs::read(b.join("trials.csv")).unwrap());
    assert_eq!(
        without_timestamps(&fs::read_to_string(a.join("manifest.json")).unwrap()),
        without_timestamps(&fs::read_to_string(b.join("manifest.json")).unwrap())
    );

    let c = tmp.path().join("c");
    assert_eq!(code(&run_into(&baseline_config(), &c, &["--trials", "80", "--seed", "32"])), 0);
    assert_ne!(fs::read(a.join("trials.csv")).unwrap(), fs::read(c.join("trials.csv")).unwrap());
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(tmp.path(), "bad.json", r#"{ "repeater_factor_f": -1 }"#);
    let o = run_into(&bad, &tmp.path().join("x"), &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("repeater_factor_f"));

    let unknown = write(tmp.path(), "unknown.json", r#"{ "repeater_factr": 1 }"#);
    assert_eq!(code(&run_into(&unknown, &tmp.path().join("y"), &[])), 2);

    let garbled = write(tmp.path(), "garbled.json", "{\n  \"trials\": 10,\n  oops\n}");
    let o = run_into(&garbled, &tmp.path().join("z"), &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn missing_config_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_into(&tmp.path().join("nope.json"), &tmp.path().join("out"), &[]);
    assert_eq!(code(&o), 4);
}

#[test]
fn compare_pairs_and_rejects() {
    let tmp = tempfile::tempdir().unwrap();
    let base: serde_json::Value = serde_json::from_str(&fs::read_to_string(baseline_config()).unwrap()).unwrap();
    let variant = |key: &str, value: serde_json::Value| {
        let mut v = base.clone();
        v[key] = value;
        v["trials"] = 100.into();
        v
    };
    let cfg_a = write(tmp.path(), "a.json", &variant("repeater_factor_f", 0.into()).to_string());
    let cfg_b = write(tmp.path(), "b.json", &variant("repeater_factor_f", 2.into()).to_string());
    let mut stray = variant("repeater_factor_f", 2.into());
    stray["network_loading"] = 0.6.into();
    let cfg_c = write(tmp.path(), "c.json", &stray.to_string());
    for (cfg, name) in [(&cfg_a, "a"), (&cfg_b, "b"), (&cfg_c, "c")] {
        assert_eq!(code(&run_into(cfg, &tmp.path().join(name), &[])), 0);
    }
    let m = |name: &str| tmp.path().join(name).join("manifest.json").to_str().unwrap().to_owned();

    let report_path = tmp.path().join("report.json");
    let o = oobe(&[
        "compare",
        "--a",
        &m("a"),
        "--b",
        &m("b"),
        "--knob",
        "repeater_factor_f",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    let closed = report["closed_form_db"].as_f64().unwrap();
    assert!((closed - 10.0 * 3f64.log10()).abs() < 1e-12);

    let o = oobe(&["compare", "--a", &m("a"), "--b", &m("c"), "--knob", "repeater_factor_f"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("network_loading"));
}

#[test]
fn sweep_tabulates_penalties() {
    let tmp = tempfile::tempdir().unwrap();
    let mut base: serde_json::Value = serde_json::from_str(&fs::read_to_string(baseline_config()).unwrap()).unwrap();
    base["trials"] = 200.into();
    let cfg = write(tmp.path(), "s.json", &base.to_string());
    let out = tmp.path().join("sweep");
    let o = oobe(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--knob",
        "repeater_factor_f",
        "--values",
        "0,1,2,4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for v in [0, 1, 2, 4] {
        assert!(out.join(format!("repeater_factor_f={v}")).join("manifest.json").exists());
    }
    let table = fs::read_to_string(out.join("penalty_table.csv")).unwrap();
    let rows: Vec<_> = table.lines().collect();
    assert_eq!(rows[0], "knob_value,down_penalty_db,up_penalty_db,combined_penalty_db,duplex_db_sum_db,closed_form_db");
    assert_eq!(rows.len(), 5);
    let down_f4: f64 = rows[4].split(',').nth(1).unwrap().parse().unwrap();
    assert!((down_f4 - 6.99).abs() < 0.5, "{down_f4}");
}

#[test]
fn sweep_with_invalid_value_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = oobe(&[
        "sweep",
        "--config",
        baseline_config().to_str().unwrap(),
        "--knob",
        "network_loading",
        "--values",
        "0.5,1.5",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
}
