//! `hgo-mfc`: run closed-loop experiments from a JSON config and write
//! CSV traces, metrics and a reproducibility manifest.
//!
//! Exit codes: 0 success (a diverged run still succeeds), 2 configuration
//! error, 3 tuning found no stable value, 1 anything else.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod manifest;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use hgo_mfc::plant::{validate_plant, OperatingBox};
use hgo_mfc::sim::{
    compute_metrics_with, default_stability_predicate, run_closed_loop, sweep, tune_parameter, write_metrics_csv,
    Metrics, SweepOptions, SweepParam, TuneParam, METRICS_CSV_HEADER,
};
use serde::Serialize;

use config::{ConfigError, Loaded};
use manifest::{Manifest, ManifestArgs};

const THREADS_ENV: &str = "HGO_MFC_THREADS";

#[derive(Parser)]
#[command(name = "hgo-mfc", version, about = "High-gain observer model-free control simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON config, or a manifest.json from an earlier run. Defaults to the
    /// built-in twin-rotor step experiment.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Overrides `sim.seed`.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// One closed-loop run: trace.csv, metrics.json, manifest.json.
    Simulate(Common),
    /// Same plant and seed, one run per estimator, side-by-side metrics.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated ids: hgo, dd, dd:N, dd(N), true-state.
        #[arg(long, value_name = "LIST", value_delimiter = ',')]
        estimators: Vec<String>,
    },
    /// One run per value of a parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// epsilon, gamma, dd_samples, noise_variance or T.
        #[arg(long, value_name = "NAME")]
        param: Option<String>,
        #[arg(long, value_name = "LIST", value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
    },
    /// Divide a parameter by 10 from a start value until the loop is stable.
    Tune {
        #[command(flatten)]
        common: Common,
        /// epsilon or gamma.
        #[arg(long, value_name = "NAME")]
        param: Option<String>,
        #[arg(long, value_name = "REAL")]
        start: Option<f64>,
    },
    /// Check the configured plant's assumptions on the operating box.
    ValidatePlant(Common),
}

enum Failure {
    Config(String),
    Exhausted(String),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(c) => cmd_simulate(&c),
        Command::Compare { common, estimators } => cmd_compare(&common, estimators),
        Command::Sweep { common, param, values } => cmd_sweep(&common, param, values),
        Command::Tune { common, param, start } => cmd_tune(&common, param, start),
        Command::ValidatePlant(c) => cmd_validate_plant(&c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Exhausted(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(3)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load(common: &Common) -> Result<Loaded, Failure> {
    let mut loaded = match &common.config {
        Some(p) => config::load(p)?,
        None => Loaded::defaults(),
    };
    if let Some(seed) = common.seed {
        loaded.file.sim.seed = seed;
    }
    Ok(loaded)
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).context("serializing JSON")?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_trace(path: &Path, trace: &hgo_mfc::Trace64) -> Result<(), Failure> {
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    trace.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_simulate(common: &Common) -> Result<(), Failure> {
    let loaded = load(common)?;
    let (label, estimator) = loaded.configured_estimator()?;
    let cfg = loaded.sim_config(estimator)?;
    prepare_out(&common.out)?;

    let trace = run_closed_loop(&cfg).map_err(|e| anyhow::anyhow!(e))?;
    let metrics =
        compute_metrics_with(&trace, cfg.reference.amplitude, &cfg.metrics).map_err(|e| anyhow::anyhow!(e))?;
    write_trace(&common.out.join("trace.csv"), &trace)?;
    write_json(&common.out.join("metrics.json"), &metrics)?;
    Manifest::new(
        "simulate",
        ManifestArgs::default(),
        &loaded.file,
        vec!["trace.csv".into(), "metrics.json".into()],
    )
    .write(&common.out)?;

    report(&label, &metrics);
    Ok(())
}

fn report(label: &str, m: &Metrics) {
    let settle = m
        .settling_time_s
        .map(|s| format!("{s:.3} s"))
        .unwrap_or_else(|| "not settled".into());
    println!(
        "{label}: overshoot {:.2}%, settling {settle}, sse {:.3e}, ops/step {}{}",
        m.overshoot_pct,
        m.steady_state_err,
        m.ops_per_step,
        if m.diverged { ", DIVERGED" } else { "" }
    );
}

#[derive(Serialize)]
struct CompareRow<'a> {
    estimator: &'a str,
    seed: u64,
    metrics: &'a Metrics,
}

fn cmd_compare(common: &Common, estimators: Vec<String>) -> Result<(), Failure> {
    let loaded = load(common)?;
    let ids = if estimators.is_empty() {
        loaded
            .manifest_args
            .as_ref()
            .and_then(|a| a.estimators.clone())
            .unwrap_or_default()
    } else {
        estimators
    };
    if ids.is_empty() {
        return Err(Failure::Config("--estimators needs at least one id".into()));
    }
    let mut runs = Vec::new();
    for id in &ids {
        let (label, kind) = config::parse_estimator(id, &loaded.file).map_err(Failure::Config)?;
        runs.push((label, loaded.sim_config(kind)?));
    }
    prepare_out(&common.out)?;

    let mut rows = Vec::new();
    let mut outputs = vec!["compare.csv".to_string(), "compare.json".to_string()];
    for (label, cfg) in &runs {
        let trace = run_closed_loop(cfg).map_err(|e| anyhow::anyhow!(e))?;
        let m = compute_metrics_with(&trace, cfg.reference.amplitude, &cfg.metrics).map_err(|e| anyhow::anyhow!(e))?;
        let name = format!("trace_{}.csv", file_safe(label));
        write_trace(&common.out.join(&name), &trace)?;
        outputs.push(name);
        report(label, &m);
        rows.push((label.clone(), m));
    }
    write_metrics_csv(&rows, BufWriter::new(File::create(common.out.join("compare.csv"))?))?;
    let json: Vec<CompareRow> = rows
        .iter()
        .map(|(label, m)| CompareRow {
            estimator: label,
            seed: loaded.file.sim.seed,
            metrics: m,
        })
        .collect();
    write_json(&common.out.join("compare.json"), &json)?;
    let args = ManifestArgs {
        estimators: Some(ids),
        ..Default::default()
    };
    Manifest::new("compare", args, &loaded.file, outputs).write(&common.out)?;
    Ok(())
}

fn file_safe(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect::<String>()
        .trim_end_matches('_')
        .to_string()
}

fn threads_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Config(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))),
        },
        Err(_) => Ok(None),
    }
}

#[derive(Serialize)]
struct SweepJsonRow<'a> {
    value: f64,
    seed: u64,
    metrics: &'a Metrics,
}

#[derive(Serialize)]
struct SweepJson<'a> {
    param: &'a str,
    rows: Vec<SweepJsonRow<'a>>,
}

fn cmd_sweep(common: &Common, param: Option<String>, values: Vec<f64>) -> Result<(), Failure> {
    let loaded = load(common)?;
    let saved = loaded.manifest_args.clone().unwrap_or_default();
    let param_name = param
        .or(saved.param)
        .ok_or_else(|| Failure::Config("--param is required".into()))?;
    let values = if values.is_empty() {
        saved.values.unwrap_or_default()
    } else {
        values
    };
    if values.is_empty() {
        return Err(Failure::Config("--values needs at least one value".into()));
    }
    let sp: SweepParam = param_name
        .parse()
        .map_err(|e: hgo_mfc::Error| Failure::Config(e.to_string()))?;
    let (_, estimator) = loaded.configured_estimator()?;
    let cfg = loaded.sim_config(estimator)?;
    let opts = SweepOptions {
        threads: threads_from_env()?,
        ..Default::default()
    };
    prepare_out(&common.out)?;

    let rows = sweep(&cfg, sp, &values, &opts).map_err(|e| match e {
        hgo_mfc::Error::Config(m) => Failure::Config(format!("{}: {m}", loaded.source)),
        other => Failure::Runtime(other.into()),
    })?;

    let labelled: Vec<(String, Metrics)> = rows
        .iter()
        .map(|r| (format!("{},{},{}", sp.name(), r.value, r.seed), r.metrics.clone()))
        .collect();
    let mut buf = Vec::new();
    write_metrics_csv(&labelled, &mut buf)?;
    let body = String::from_utf8(buf).context("metrics CSV is ASCII")?;
    let header = METRICS_CSV_HEADER.replacen("label", "param,value,seed", 1);
    let csv = body.replacen(METRICS_CSV_HEADER, &header, 1);
    fs::write(common.out.join("sweep.csv"), csv)?;
    for r in &rows {
        report(&format!("{}={}", sp.name(), r.value), &r.metrics);
    }
    let json = SweepJson {
        param: sp.name(),
        rows: rows
            .iter()
            .map(|r| SweepJsonRow {
                value: r.value,
                seed: r.seed,
                metrics: &r.metrics,
            })
            .collect(),
    };
    write_json(&common.out.join("sweep.json"), &json)?;
    let args = ManifestArgs {
        param: Some(param_name),
        values: Some(values),
        ..Default::default()
    };
    Manifest::new(
        "sweep",
        args,
        &loaded.file,
        vec!["sweep.csv".into(), "sweep.json".into()],
    )
    .write(&common.out)?;
    Ok(())
}

#[derive(Serialize)]
struct TuneJson<'a> {
    param: &'a str,
    start: f64,
    max_reductions: usize,
    accepted: Option<f64>,
    attempts: &'a [hgo_mfc::sim::TuneAttempt],
}

fn cmd_tune(common: &Common, param: Option<String>, start: Option<f64>) -> Result<(), Failure> {
    let loaded = load(common)?;
    let saved = loaded.manifest_args.clone().unwrap_or_default();
    let param_name = param
        .or(saved.param)
        .ok_or_else(|| Failure::Config("--param is required".into()))?;
    let start = start
        .or(saved.start)
        .ok_or_else(|| Failure::Config("--start is required".into()))?;
    let tp: TuneParam = param_name
        .parse()
        .map_err(|e: hgo_mfc::Error| Failure::Config(e.to_string()))?;
    let (_, estimator) = loaded.configured_estimator()?;
    let cfg = loaded.sim_config(estimator)?;
    if !(start > 0.0 && start.is_finite()) {
        return Err(Failure::Config(format!("--start must be positive, got {start}")));
    }
    prepare_out(&common.out)?;

    let max_reductions = loaded.file.sim.max_reductions;
    let outcome = tune_parameter(
        &cfg,
        tp,
        start,
        max_reductions,
        default_stability_predicate(Default::default()),
    )
    .map_err(|e| Failure::Runtime(e.into()))?;

    let mut csv = String::from("attempt,value,accepted,diverged,detail\n");
    for (i, a) in outcome.audit.iter().enumerate() {
        csv.push_str(&format!(
            "{i},{},{},{},\"{}\"\n",
            a.value,
            a.accepted,
            a.diverged,
            a.detail.replace('"', "'")
        ));
        println!(
            "{}={}: {}",
            tp.name(),
            a.value,
            if a.accepted { "accepted" } else { &a.detail }
        );
    }
    fs::write(common.out.join("tune_audit.csv"), csv)?;
    write_json(
        &common.out.join("tune.json"),
        &TuneJson {
            param: tp.name(),
            start,
            max_reductions,
            accepted: outcome.accepted,
            attempts: &outcome.audit,
        },
    )?;
    let args = ManifestArgs {
        param: Some(param_name),
        start: Some(start),
        ..Default::default()
    };
    Manifest::new(
        "tune",
        args,
        &loaded.file,
        vec!["tune_audit.csv".into(), "tune.json".into()],
    )
    .write(&common.out)?;

    match outcome.accepted {
        Some(v) => {
            println!("accepted {} = {v}", tp.name());
            Ok(())
        }
        None => Err(Failure::Exhausted(format!(
            "no stable {} after {} attempts",
            tp.name(),
            outcome.audit.len()
        ))),
    }
}

#[derive(Serialize)]
struct ValidationJson {
    plant: &'static str,
    ok: bool,
    min_abs_b: f64,
    max_abs_b: f64,
    b_bounded_away_from_zero: bool,
    b_bound_respected: Option<bool>,
    zero_dynamics_decays: bool,
    verdicts: Vec<String>,
}

fn cmd_validate_plant(common: &Common) -> Result<(), Failure> {
    let loaded = load(common)?;
    let plant = loaded.plant();
    prepare_out(&common.out)?;
    let v = validate_plant(&plant, &OperatingBox::default());
    let json = ValidationJson {
        plant: plant.name(),
        ok: v.ok(),
        min_abs_b: v.min_abs_b,
        max_abs_b: v.max_abs_b,
        b_bounded_away_from_zero: v.b_bounded_away_from_zero,
        b_bound_respected: v.b_bound_respected,
        zero_dynamics_decays: v.zero_dynamics_decays,
        verdicts: v.verdicts.clone(),
    };
    write_json(&common.out.join("validation.json"), &json)?;
    Manifest::new(
        "validate-plant",
        ManifestArgs::default(),
        &loaded.file,
        vec!["validation.json".into()],
    )
    .write(&common.out)?;
    println!(
        "{}: |b| in [{}, {}], zero dynamics {}",
        plant.name(),
        v.min_abs_b,
        v.max_abs_b,
        if v.zero_dynamics_decays {
            "decay"
        } else {
            "do not decay"
        }
    );
    for verdict in &v.verdicts {
        println!("  {verdict}");
    }
    Ok(())
}
