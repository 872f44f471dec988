use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use oobe_mc::aggregation::Metric;
use oobe_mc::runner::{self, format_dbm};
use oobe_mc::scenario::Scenario;
use oobe_mc::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "oobe-mc", version, about = "Aggregate 5G OOBE interference into a 23.8 GHz sounder footprint")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every trial of a scenario and write trials.csv + manifest.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the scenario master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario trial count.
        #[arg(long)]
        trials: Option<u32>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write cdf.csv for plotting.
        #[arg(long)]
        cdf: bool,
    },
    /// Penalty of run B relative to baseline run A.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// The single scenario field allowed to differ.
        #[arg(long)]
        knob: String,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario once per knob value and tabulate penalties.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        knob: String,
        /// Comma-separated JSON literals, e.g. `0,1,2,4` or `true,false`.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn parse_value(raw: &str) -> serde_json::Value {
    serde_json::from_str(raw.trim()).unwrap_or_else(|_| serde_json::Value::String(raw.trim().to_owned()))
}

fn execute(cli: Cli) -> Result<()> {
    let threads = runner::threads_from_env();
    match cli.command {
        Command::Run {
            config,
            seed,
            trials,
            out,
            cdf,
        } => {
            let mut s = Scenario::from_path(&config)?;
            if let Some(seed) = seed {
                s.master_seed = seed;
            }
            if let Some(trials) = trials {
                s.trials = trials;
            }
            let output = runner::run(&s, threads)?;
            let manifest = runner::write_outputs(&output, &out, cdf)?;
            let st = output.statistics();
            println!("trials       {}", st.trials);
            println!("scenario     {}", output.manifest.scenario_sha256);
            for m in [Metric::Down, Metric::Up, Metric::Combined] {
                let ms = st.metric(m);
                println!(
                    "{:<12} mean {} dBm  p99 {} dBm",
                    m.name(),
                    format_dbm(ms.mean_dbm),
                    format_dbm(ms.p99_dbm)
                );
            }
            if let Some(ex) = st.exceedance {
                println!("exceedance   {ex:.6} (combined > {} dBm)", format_dbm(st.threshold_dbm.unwrap_or(f64::NAN)));
            }
            println!("manifest     {}", manifest.display());
        }
        Command::Compare { a, b, knob, out } => {
            let ma = runner::read_manifest(&a)?;
            let mb = runner::read_manifest(&b)?;
            let report = runner::compare(&ma, &mb, &knob)?;
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            match out {
                Some(path) => std::fs::write(&path, text + "\n").map_err(|e| Error::Io { path, source: e })?,
                None => println!("{text}"),
            }
        }
        Command::Sweep {
            config,
            knob,
            values,
            out,
        } => {
            let s = Scenario::from_path(&config)?;
            let values: Vec<_> = values.iter().map(|v| parse_value(v)).collect();
            let rows = runner::sweep(&s, &knob, &values, &out, threads)?;
            println!("{}", runner::SWEEP_TABLE_HEADER);
            for row in rows {
                let r = &row.report;
                println!(
                    "{},{},{},{},{},{}",
                    row.value,
                    format_dbm(r.penalty(Metric::Down)),
                    format_dbm(r.penalty(Metric::Up)),
                    format_dbm(r.penalty(Metric::Combined)),
                    format_dbm(r.duplex_db_sum_approximation),
                    r.closed_form_db.map(format_dbm).unwrap_or_default()
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
