use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use forestlb::experiment::{load_config, run_hopper_experiment, run_static_experiment, run_sweep, validate_config, ExperimentConfig, ScenarioKind};
use forestlb::metrics::{experiment_csv, hopper_csv, log_log_slope, ExperimentRow};
use forestlb::{Error, Result};

const STATIC_DEFAULT: &str = include_str!("../../../configs/static.toml");
const SWEEP_DEFAULT: &str = include_str!("../../../configs/sweep.toml");
const HOPPER_DEFAULT: &str = include_str!("../../../configs/hopper.toml");

#[derive(Parser)]
#[command(name = "forestlb", version, about = "Load-balancing experiments on a simulated cluster")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// One pipeline run per (balancer, p) on the static box fill.
    Static(Opts),
    /// Hopper discharge time series with an unbalanced control.
    Hopper(Opts),
    /// Weak-scaling sweep of the static scenario; prints slopes to stderr.
    Sweep(Opts),
}

#[derive(Args)]
struct Opts {
    /// TOML experiment config; built-in defaults are used without it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output path; stdout when neither this nor `output` is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated balancer names, e.g. `sfc_hilbert,diffusive(10)`.
    #[arg(long, value_delimiter = ',')]
    balancer: Vec<String>,
    /// Comma-separated rank counts.
    #[arg(long, value_delimiter = ',')]
    p: Vec<u32>,
    #[arg(long)]
    seed: Option<u64>,
}

fn configure(opts: &Opts, default: &str, want: ScenarioKind) -> Result<ExperimentConfig> {
    let mut cfg = match &opts.config {
        Some(path) => load_config(path)?,
        None => validate_config(default)?,
    };
    if cfg.scenario != want {
        return Err(Error::config("scenario", format!("this verb needs scenario = \"{}\"", scenario_name(want))));
    }
    if !opts.balancer.is_empty() {
        let mut kinds = Vec::new();
        for (i, name) in opts.balancer.iter().enumerate() {
            kinds.push(cfg.parse_balancer(name).map_err(|e| Error::config(format!("--balancer[{i}]"), e.to_string()))?);
        }
        cfg.balancers = kinds;
    }
    if !opts.p.is_empty() {
        cfg.p_sweep = opts.p.clone();
    }
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn scenario_name(k: ScenarioKind) -> &'static str {
    match k {
        ScenarioKind::Static => "static",
        ScenarioKind::Hopper => "hopper",
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_slopes(rows: &[ExperimentRow]) {
    let mut names: Vec<&str> = rows.iter().map(|r| r.balancer.as_str()).collect();
    names.dedup();
    for name in names {
        let mine: Vec<&ExperimentRow> = rows.iter().filter(|r| r.balancer == name).collect();
        if mine.len() < 2 {
            continue;
        }
        let fit = |f: fn(&ExperimentRow) -> f64| log_log_slope(&mine.iter().map(|r| (r.p as f64, f(r))).collect::<Vec<_>>());
        eprintln!(
            "{name}: slope of per-rank memory {:.3}, of per-rank work {:.3}",
            fit(|r| r.mem_bytes_max_rank as f64),
            fit(|r| r.balancer_work_max_rank as f64)
        );
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.verb {
        Verb::Static(o) => {
            let cfg = configure(&o, STATIC_DEFAULT, ScenarioKind::Static)?;
            let rows = run_static_experiment(&cfg)?;
            emit(&experiment_csv(&rows), o.out.as_deref().or(cfg.output.as_deref()))
        }
        Verb::Sweep(o) => {
            let cfg = configure(&o, SWEEP_DEFAULT, ScenarioKind::Static)?;
            let rows = run_sweep(&cfg)?;
            print_slopes(&rows);
            emit(&experiment_csv(&rows), o.out.as_deref().or(cfg.output.as_deref()))
        }
        Verb::Hopper(o) => {
            let cfg = configure(&o, HOPPER_DEFAULT, ScenarioKind::Hopper)?;
            let rows = run_hopper_experiment(&cfg)?;
            emit(&hopper_csv(&rows), o.out.as_deref().or(cfg.output.as_deref()))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
