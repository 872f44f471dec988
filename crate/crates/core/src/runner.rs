//! Run orchestration, output files and paired-experiment drivers.
//!
//! A run writes three files into its output directory:
//!
//! - `trials.csv`: one row per trial, header [`TRIALS_CSV_HEADER`]
//! - `manifest.json`: resolved scenario, hashes, RNG id, timestamps, statistics
//! - `cdf.csv` (optional): empirical CDF of the combined power, `dbm,cdf`
//!
//! dBm values in CSV carry four decimals; empty sums are written `-inf`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aggregation::{
    aggregate_trial, dbm_serde, penalty_closed_form, ratio_db, run_statistics, LinkContext, Metric, RunStatistics,
    TrialResult,
};
use crate::deployment::generate_trial;
use crate::error::{Error, Result};
use crate::scenario::{differing_fields, Scenario, RNG_ALGORITHM};

pub const TRIALS_CSV_HEADER: &str =
    "trial,gnb_dbm,rep_down_dbm,ue_dbm,rep_up_dbm,down_dbm,up_dbm,combined_dbm,n_gnb,n_rep,n_ue_active";
pub const CDF_CSV_HEADER: &str = "dbm,cdf";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRIALS_FILE: &str = "trials.csv";
pub const CDF_FILE: &str = "cdf.csv";

/// Environment variable capping worker threads; `0` or unset means automatic.
pub const THREADS_ENV: &str = "OOBE_MC_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub scenario: Scenario,
    pub scenario_sha256: String,
    pub master_seed: u64,
    pub rng_algorithm: String,
    pub started_at: String,
    pub finished_at: String,
    pub trials_csv: String,
    pub trials_csv_sha256: String,
    pub statistics: RunStatistics,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub manifest: RunManifest,
    pub results: Vec<TrialResult>,
}

impl RunOutput {
    pub fn statistics(&self) -> &RunStatistics {
        &self.manifest.statistics
    }
}

pub fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

/// Evaluate every trial. Results are ordered by trial index regardless of
/// the worker count, so output is schedule independent.
pub fn run_trials(s: &Scenario, threads: usize) -> Result<Vec<TrialResult>> {
    let ctx = LinkContext::from_scenario(s);
    let eval = |i: u64| generate_trial(s, i).map(|d| aggregate_trial(&d, &ctx));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..s.trials as u64).into_par_iter().map(eval).collect())
}

fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub fn run(s: &Scenario, threads: usize) -> Result<RunOutput> {
    s.validate()?;
    let started_at = now_rfc3339();
    let results = run_trials(s, threads)?;
    let statistics = run_statistics(&results, s.threshold_dbm)?;
    let csv = trials_csv(&results);
    let manifest = RunManifest {
        artifact_version: crate::VERSION.to_owned(),
        scenario: s.clone(),
        scenario_sha256: s.hash(),
        master_seed: s.master_seed,
        rng_algorithm: RNG_ALGORITHM.to_owned(),
        started_at,
        finished_at: now_rfc3339(),
        trials_csv: TRIALS_FILE.to_owned(),
        trials_csv_sha256: hex::encode(Sha256::digest(csv.as_bytes())),
        statistics,
    };
    Ok(RunOutput { manifest, results })
}

pub fn format_dbm(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else if v < 0.0 {
        "-inf".to_owned()
    } else {
        "inf".to_owned()
    }
}

pub fn trials_csv(results: &[TrialResult]) -> String {
    let mut out = String::with_capacity(96 * (results.len() + 1));
    out.push_str(TRIALS_CSV_HEADER);
    out.push('\n');
    for r in results {
        let _ = write!(out, "{}", r.trial_index);
        for m in Metric::ALL {
            let _ = write!(out, ",{}", format_dbm(r.metric_dbm(m)));
        }
        let _ = writeln!(
            out,
            ",{},{},{}",
            r.active.gnb,
            r.active.repeater_down + r.active.repeater_up,
            r.active.ue
        );
    }
    out
}

pub fn cdf_csv(stats: &RunStatistics) -> String {
    let mut out = String::from(CDF_CSV_HEADER);
    out.push('\n');
    for p in &stats.combined_cdf {
        let _ = writeln!(out, "{},{}", format_dbm(p.dbm), p.cdf);
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn manifest_json(m: &RunManifest) -> String {
    let mut text = serde_json::to_string_pretty(m).expect("manifest serializes");
    text.push('\n');
    text
}

/// Write `trials.csv`, `manifest.json` and, when asked, `cdf.csv`.
pub fn write_outputs(out: &RunOutput, dir: &Path, with_cdf: bool) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join(TRIALS_FILE), &trials_csv(&out.results))?;
    if with_cdf {
        write_file(&dir.join(CDF_FILE), &cdf_csv(out.statistics()))?;
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    write_file(&manifest_path, &manifest_json(&out.manifest))?;
    Ok(manifest_path)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: format!("{}: {e}", path.display()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPenalty {
    pub metric: Metric,
    /// `10·log10(mean_b / mean_a)` over linear powers.
    #[serde(with = "dbm_serde")]
    pub mean_penalty_db: f64,
    #[serde(with = "dbm_serde")]
    pub median_delta_db: f64,
    #[serde(with = "dbm_serde")]
    pub p90_delta_db: f64,
    #[serde(with = "dbm_serde")]
    pub p99_delta_db: f64,
    #[serde(with = "dbm_serde")]
    pub p999_delta_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyReport {
    pub knob: String,
    pub baseline_sha256: String,
    pub variant_sha256: String,
    pub metrics: Vec<MetricPenalty>,
    /// `10·log10(1 + F_b) - 10·log10(1 + F_a)` when the knob is the repeater factor.
    pub closed_form_db: Option<f64>,
    /// Downstream plus upstream penalty added in dB. This is the additive
    /// approximation for duplex deployments, not a linear power ratio;
    /// compare it against the `combined` metric.
    #[serde(with = "dbm_serde")]
    pub duplex_db_sum_approximation: f64,
}

impl PenaltyReport {
    pub fn penalty(&self, m: Metric) -> f64 {
        self.metrics
            .iter()
            .find(|p| p.metric == m)
            .map(|p| p.mean_penalty_db)
            .expect("every metric compared")
    }
}

fn delta(b: f64, a: f64) -> f64 {
    if a == b {
        0.0
    } else {
        b - a
    }
}

fn knob_covers(knob: &str, field: &str) -> bool {
    field == knob || field.strip_prefix(knob).is_some_and(|rest| rest.starts_with('.'))
}

/// Check that two scenarios form a paired experiment varying only `knob`.
pub fn check_pairing(a: &Scenario, b: &Scenario, knob: &str) -> Result<()> {
    let stray: Vec<String> = differing_fields(a, b)
        .into_iter()
        .filter(|f| !knob_covers(knob, f))
        .collect();
    if stray.is_empty() {
        Ok(())
    } else {
        Err(Error::Pairing(format!(
            "scenarios differ outside knob `{knob}`: {}",
            stray.join(", ")
        )))
    }
}

/// Penalty of run `b` relative to baseline run `a`.
pub fn compare(a: &RunManifest, b: &RunManifest, knob: &str) -> Result<PenaltyReport> {
    for m in [a, b] {
        if m.scenario.hash() != m.scenario_sha256 {
            return Err(Error::Pairing(format!(
                "manifest scenario hash {} does not match its scenario",
                m.scenario_sha256
            )));
        }
    }
    check_pairing(&a.scenario, &b.scenario, knob)?;
    let (sa, sb) = (&a.statistics, &b.statistics);
    if sa.trials != sb.trials {
        return Err(Error::Pairing(format!("trial counts differ ({} vs {})", sa.trials, sb.trials)));
    }

    let metrics: Vec<MetricPenalty> = Metric::ALL
        .into_iter()
        .map(|m| {
            let (ma, mb) = (sa.metric(m), sb.metric(m));
            MetricPenalty {
                metric: m,
                mean_penalty_db: ratio_db(mb.mean_mw, ma.mean_mw),
                median_delta_db: delta(mb.median_dbm, ma.median_dbm),
                p90_delta_db: delta(mb.p90_dbm, ma.p90_dbm),
                p99_delta_db: delta(mb.p99_dbm, ma.p99_dbm),
                p999_delta_db: delta(mb.p999_dbm, ma.p999_dbm),
            }
        })
        .collect();

    let closed_form_db = (knob == "repeater_factor_f").then(|| {
        penalty_closed_form(b.scenario.repeater_factor_f).db() - penalty_closed_form(a.scenario.repeater_factor_f).db()
    });

    let find = |m: Metric| metrics.iter().find(|p| p.metric == m).map(|p| p.mean_penalty_db).unwrap_or(0.0);
    Ok(PenaltyReport {
        knob: knob.to_owned(),
        baseline_sha256: a.scenario_sha256.clone(),
        variant_sha256: b.scenario_sha256.clone(),
        duplex_db_sum_approximation: find(Metric::Down) + find(Metric::Up),
        metrics,
        closed_form_db,
    })
}

/// One row of a sweep's penalty table, relative to the first value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: serde_json::Value,
    pub output_dir: PathBuf,
    pub report: PenaltyReport,
}

pub const SWEEP_TABLE_HEADER: &str =
    "knob_value,down_penalty_db,up_penalty_db,combined_penalty_db,duplex_db_sum_db,closed_form_db";
pub const SWEEP_TABLE_FILE: &str = "penalty_table.csv";

fn dir_label(v: &serde_json::Value) -> String {
    let raw = match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    raw.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

/// Run the scenario once per knob value and tabulate penalties against the
/// first value. Each run lands in `out_dir/<knob>=<value>/`.
pub fn sweep(
    base: &Scenario,
    knob: &str,
    values: &[serde_json::Value],
    out_dir: &Path,
    threads: usize,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one value"));
    }
    let scenarios = values
        .iter()
        .map(|v| base.with_override(knob, v.clone()))
        .collect::<Result<Vec<_>>>()?;

    let mut manifests = Vec::with_capacity(scenarios.len());
    let mut dirs = Vec::with_capacity(scenarios.len());
    for (v, s) in values.iter().zip(&scenarios) {
        let out = run(s, threads)?;
        let dir = out_dir.join(format!("{knob}={}", dir_label(v)));
        write_outputs(&out, &dir, true)?;
        manifests.push(out.manifest);
        dirs.push(dir);
    }

    let mut rows = Vec::with_capacity(values.len());
    for ((v, m), dir) in values.iter().zip(&manifests).zip(dirs) {
        rows.push(SweepRow {
            value: v.clone(),
            output_dir: dir,
            report: compare(&manifests[0], m, knob)?,
        });
    }

    let mut table = String::from(SWEEP_TABLE_HEADER);
    table.push('\n');
    for row in &rows {
        let r = &row.report;
        let _ = writeln!(
            table,
            "{},{},{},{},{},{}",
            dir_label(&row.value),
            format_dbm(r.penalty(Metric::Down)),
            format_dbm(r.penalty(Metric::Up)),
            format_dbm(r.penalty(Metric::Combined)),
            format_dbm(r.duplex_db_sum_approximation),
            r.closed_form_db.map(format_dbm).unwrap_or_default(),
        );
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_file(&out_dir.join(SWEEP_TABLE_FILE), &table)?;
    Ok(rows)
}
