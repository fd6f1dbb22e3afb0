//! `simirs` — experiment driver for the reflecting-surface downlink
//! simulator. Three subcommands cover the experiment set: `run` (one seeded
//! alternating optimization with its trace), `convergence` (traces across
//! config variants and seeds), and `sweep` (paired Monte-Carlo curves over
//! one scenario parameter).
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime/numerical
//! error, 4 I/O error.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::ConfigDoc;
use output::{fmt_f64, line_chart, Csv, Manifest, Series, StageTiming};
use simirs_core::engine::{self, Method, SweepParam};
use simirs_core::{EngineError, ScenarioConfig};

#[derive(Parser)]
#[command(name = "simirs", version, about = "IRS-assisted mmWave downlink experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One seeded run: trace.csv, summary.csv and manifest.json.
    Run {
        /// Scenario JSON.
        #[arg(long)]
        config: PathBuf,
        /// Channel/realization seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory (created if missing).
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Convergence traces per config variant and seed: convergence.csv.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        /// Base seed; trial t runs on seed + t.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Seeds per variant.
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also render convergence.svg.
        #[arg(long)]
        svg: bool,
    },
    /// Monte-Carlo curves over one parameter: sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Swept parameter: M, N, Ps, K or b.
        #[arg(long)]
        param: String,
        /// Comma-separated parameter values.
        #[arg(long)]
        values: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Paired trials per value.
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also render sweep.svg.
        #[arg(long)]
        svg: bool,
    },
}

// ── error-to-exit-code mapping ──────────────────────────────────────────

enum CliError {
    Config(String),
    Runtime(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) | CliError::Io(m) => m,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Config(c) => CliError::Config(c.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, seed, out } => cmd_run(&config, seed, &out),
        Command::Convergence {
            config,
            seed,
            trials,
            out,
            svg,
        } => cmd_convergence(&config, seed, trials, &out, svg),
        Command::Sweep {
            config,
            param,
            values,
            seed,
            trials,
            out,
            svg,
        } => cmd_sweep(&config, &param, &values, seed, trials, &out, svg),
    };
    if let Err(e) = result {
        eprintln!("simirs: {}", e.message());
        std::process::exit(e.code());
    }
}

// ── shared plumbing ─────────────────────────────────────────────────────

fn load_config(path: &Path) -> Result<(ConfigDoc, ScenarioConfig), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    let doc: ConfigDoc = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config does not parse: {e}")))?;
    let scenario = doc.to_scenario();
    scenario
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    for warning in scenario.warnings() {
        eprintln!("simirs: warning: {warning}");
    }
    Ok((doc, scenario))
}

fn prepare_out(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))
}

// ── run ─────────────────────────────────────────────────────────────────

fn cmd_run(config_path: &Path, seed: u64, out: &Path) -> Result<(), CliError> {
    let (doc, cfg) = load_config(config_path)?;
    prepare_out(out)?;

    let mut manifest = Manifest::new("run", seed, doc);
    manifest.artifacts = vec!["trace.csv".into(), "summary.csv".into()];
    manifest.write(out)?;

    let started = Instant::now();
    let (report, trace) = engine::run_alternating(&cfg, seed)?;
    let solve_seconds = started.elapsed().as_secs_f64();

    let write_started = Instant::now();
    let mut trace_csv = Csv::new("iter,sum_rate_bps,f6");
    for rec in &trace.records {
        trace_csv.row(&[
            rec.iteration.to_string(),
            fmt_f64(rec.sum_rate),
            fmt_f64(rec.f6_final),
        ]);
    }
    trace_csv.write(&out.join("trace.csv"))?;

    let mut summary = Csv::new("record,user,value");
    for (k, &sinr) in report.sinr.iter().enumerate() {
        summary.row(&["sinr".into(), k.to_string(), fmt_f64(sinr)]);
    }
    for (k, &rate) in report.rate.iter().enumerate() {
        summary.row(&["rate_bps".into(), k.to_string(), fmt_f64(rate)]);
    }
    summary.row(&["sum_rate_bps".into(), String::new(), fmt_f64(report.sum_rate)]);
    summary.row(&[
        "ee_bps_per_w".into(),
        String::new(),
        fmt_f64(report.energy_efficiency),
    ]);
    summary.write(&out.join("summary.csv"))?;

    manifest.stage_seconds = vec![
        StageTiming {
            stage: "solve".into(),
            seconds: solve_seconds,
        },
        StageTiming {
            stage: "write".into(),
            seconds: write_started.elapsed().as_secs_f64(),
        },
    ];
    manifest.write(out)?;
    println!(
        "run: sum rate {} bit/s over {} iterations (converged: {})",
        fmt_f64(report.sum_rate),
        trace.records.len(),
        trace.converged
    );
    Ok(())
}

// ── convergence ─────────────────────────────────────────────────────────

fn cmd_convergence(
    config_path: &Path,
    base_seed: u64,
    trials: usize,
    out: &Path,
    svg: bool,
) -> Result<(), CliError> {
    let (doc, cfg) = load_config(config_path)?;
    prepare_out(out)?;

    let variants = doc.variants();
    // all variants must be valid before any work starts
    let mut derived = Vec::new();
    for v in &variants {
        let mut c = cfg.clone();
        c.user_count = v.user_count;
        c.phase_bits = v.phase_bits;
        c.validate().map_err(|e| {
            CliError::Config(format!(
                "variant K={} b={}: {e}",
                v.user_count, v.phase_bits
            ))
        })?;
        derived.push(c);
    }

    let mut manifest = Manifest::new("convergence", base_seed, doc);
    manifest.trials = Some(trials);
    manifest.artifacts = vec!["convergence.csv".into()];
    if svg {
        manifest.artifacts.push("convergence.svg".into());
    }
    manifest.write(out)?;

    let started = Instant::now();
    let mut csv = Csv::new("variant,iter,sum_rate_bps");
    let mut series = Vec::new();
    for (v, c) in variants.iter().zip(&derived) {
        for t in 0..trials {
            let seed = base_seed.wrapping_add(t as u64);
            let (_, trace) = engine::run_alternating(c, seed)?;
            let label = format!("K{}_b{}_seed{}", v.user_count, v.phase_bits, seed);
            let mut points = Vec::new();
            for rec in &trace.records {
                csv.row(&[label.clone(), rec.iteration.to_string(), fmt_f64(rec.sum_rate)]);
                points.push((rec.iteration as f64, rec.sum_rate));
            }
            series.push(Series { label, points });
        }
    }
    csv.write(&out.join("convergence.csv"))?;
    if svg {
        let chart = line_chart("Convergence", "iteration", "sum rate (bit/s)", &series);
        std::fs::write(out.join("convergence.svg"), chart)?;
    }

    manifest.stage_seconds = vec![StageTiming {
        stage: "solve".into(),
        seconds: started.elapsed().as_secs_f64(),
    }];
    manifest.write(out)?;
    println!(
        "convergence: {} traces ({} variants x {} seeds)",
        variants.len() * trials,
        variants.len(),
        trials
    );
    Ok(())
}

// ── sweep ───────────────────────────────────────────────────────────────

fn cmd_sweep(
    config_path: &Path,
    param: &str,
    values: &str,
    base_seed: u64,
    trials: usize,
    out: &Path,
    svg: bool,
) -> Result<(), CliError> {
    let (doc, cfg) = load_config(config_path)?;
    let param: SweepParam = param
        .parse()
        .map_err(|e: String| CliError::Config(e))?;
    let values: Vec<f64> = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("bad value `{v}`: {e}")))
        })
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err(CliError::Config("need at least one sweep value".into()));
    }
    if trials == 0 {
        return Err(CliError::Config("need at least one trial".into()));
    }
    prepare_out(out)?;

    let mut manifest = Manifest::new("sweep", base_seed, doc);
    manifest.trials = Some(trials);
    manifest.param = Some(param.name().to_string());
    manifest.values = Some(values.clone());
    manifest.artifacts = vec!["sweep.csv".into()];
    if svg {
        manifest.artifacts.push("sweep.svg".into());
    }
    manifest.write(out)?;

    let started = Instant::now();
    let result = engine::sweep(&cfg, param, &values, trials, base_seed, &Method::all());

    let mut csv = Csv::new("param,value,algorithm,mean_sum_rate_bps,std_sum_rate_bps,mean_ee_bps_per_w");
    let mut per_method: Vec<(Method, Vec<(f64, f64)>)> =
        Method::all().iter().map(|&m| (m, Vec::new())).collect();
    for row in &result.rows {
        match &row.outcome {
            Ok(stats) => {
                for s in stats {
                    csv.row(&[
                        param.name().into(),
                        fmt_f64(row.value),
                        s.method.name().into(),
                        fmt_f64(s.mean_sum_rate),
                        fmt_f64(s.std_sum_rate),
                        fmt_f64(s.mean_energy_efficiency),
                    ]);
                    if let Some(entry) = per_method.iter_mut().find(|(m, _)| *m == s.method) {
                        entry.1.push((row.value, s.mean_sum_rate));
                    }
                }
            }
            Err(msg) => {
                eprintln!(
                    "simirs: warning: {} = {} skipped: {msg}",
                    param.name(),
                    row.value
                );
            }
        }
    }
    csv.write(&out.join("sweep.csv"))?;
    if svg {
        let series: Vec<Series> = per_method
            .into_iter()
            .map(|(m, points)| Series {
                label: m.name().to_string(),
                points,
            })
            .collect();
        let chart = line_chart(
            &format!("Sum rate vs {}", param.name()),
            param.name(),
            "mean sum rate (bit/s)",
            &series,
        );
        std::fs::write(out.join("sweep.svg"), chart)?;
    }

    manifest.stage_seconds = vec![StageTiming {
        stage: "solve".into(),
        seconds: started.elapsed().as_secs_f64(),
    }];
    manifest.write(out)?;
    println!(
        "sweep: {} over {:?} with {} trials per value",
        param.name(),
        values,
        trials
    );
    Ok(())
}
