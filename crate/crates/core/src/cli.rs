//! Command-line front end: single runs, seed sweeps and paired
//! reroute-on/off comparisons.

use crate::config::{ConfigErrors, ReportFormat, ScenarioConfig};
use crate::output::fmt_sig;
use crate::sim::{emit_report, RunReport, SimError, Simulation};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use std::fs;
use std::io::{self, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Environment variable holding the sweep worker count.
pub const WORKERS_ENV: &str = "ANTJAM_WORKERS";

pub const SWEEP_COLUMNS: [&str; 8] = [
    "seed",
    "pdr",
    "mean_delay",
    "reroutes",
    "sent",
    "delivered",
    "dropped",
    "jammed_peak",
];

pub const COMPARE_COLUMNS: [&str; 5] = ["seed", "pdr_on", "pdr_off", "delta_pdr", "reroutes_on"];

#[derive(Debug, Parser)]
#[command(
    name = "antjam",
    version,
    about = "WSN jamming simulator with sensitive-ant rerouting"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and emit its report.
    Run(RunArgs),
    /// Run one scenario per seed and emit a CSV row per seed.
    Sweep(SweepArgs),
    /// Run every seed with rerouting on and off.
    Compare(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Overrides the config's output format.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Overrides the config's output path; `-` is stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Writes the final link-quality table as CSV.
    #[arg(long)]
    pub eta_out: Option<PathBuf>,
    /// Writes per-iteration statistics of the last route search as CSV.
    #[arg(long)]
    pub stats_out: Option<PathBuf>,
    /// Leaves per-iteration search statistics out of the JSON report.
    #[arg(long)]
    pub no_search_stats: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Inclusive seed range `a..b`.
    #[arg(long, value_parser = parse_seed_range)]
    pub seeds: RangeInclusive<u64>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn parse_seed_range(s: &str) -> Result<RangeInclusive<u64>, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected <a>..<b>, got \"{s}\""))?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let a: u64 = a
        .trim()
        .parse()
        .map_err(|e| format!("bad start seed: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("bad end seed: {e}"))?;
    if a > b {
        return Err(format!("empty seed range {a}..{b}"));
    }
    Ok(a..=b)
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("invalid config {path}:\n{errors}")]
    Config { path: String, errors: ConfigErrors },
    #[error("scenario setup failed: {0}")]
    Setup(#[from] SimError),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Setup(_) | CliError::Pool(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    ScenarioConfig::parse(&text).map_err(|errors| CliError::Config {
        path: path.display().to_string(),
        errors,
    })
}

/// Writes `bytes` to `path`, or stdout for `None` and `-`.
fn write_to(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) if p != Path::new("-") => fs::write(p, bytes).map_err(io_err(p)),
        _ => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(io_err(Path::new("<stdout>")))
        }
    }
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let fail = |e: csv::Error| CliError::Io {
        path: "<csv>".into(),
        source: io::Error::other(e),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.write_record(r).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Io {
        path: "<csv>".into(),
        source: io::Error::other(e.to_string()),
    })
}

fn pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Pool(format!("{WORKERS_ENV}=\"{v}\" is not a worker count")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Pool(e.to_string()))
}

/// Runs every seed in parallel; results come back in seed order.
pub fn run_seeds(
    config: &ScenarioConfig,
    seeds: RangeInclusive<u64>,
) -> Result<Vec<RunReport>, CliError> {
    let seeds: Vec<u64> = seeds.collect();
    pool()?.install(|| {
        seeds
            .par_iter()
            .map(|&s| Ok(Simulation::new(config, s)?.without_search_stats().run()))
            .collect()
    })
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

pub fn sweep_rows(reports: &[RunReport]) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.seed.to_string(),
                fmt_sig(r.pdr),
                fmt_sig(r.mean_delay),
                r.reroute_count.to_string(),
                r.sent.to_string(),
                r.delivered.to_string(),
                r.dropped.to_string(),
                r.jammed_peak.to_string(),
            ]
        })
        .collect();
    let m = |f: fn(&RunReport) -> f64| fmt_sig(mean(reports.iter().map(f)));
    rows.push(vec![
        "mean".into(),
        m(|r| r.pdr),
        m(|r| r.mean_delay),
        m(|r| r.reroute_count as f64),
        m(|r| r.sent as f64),
        m(|r| r.delivered as f64),
        m(|r| r.dropped as f64),
        m(|r| r.jammed_peak as f64),
    ]);
    rows
}

pub fn compare_rows(on: &[RunReport], off: &[RunReport]) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = on
        .iter()
        .zip(off)
        .map(|(a, b)| {
            vec![
                a.seed.to_string(),
                fmt_sig(a.pdr),
                fmt_sig(b.pdr),
                fmt_sig(a.pdr - b.pdr),
                a.reroute_count.to_string(),
            ]
        })
        .collect();
    rows.push(vec![
        "mean".into(),
        fmt_sig(mean(on.iter().map(|r| r.pdr))),
        fmt_sig(mean(off.iter().map(|r| r.pdr))),
        fmt_sig(mean(on.iter().zip(off).map(|(a, b)| a.pdr - b.pdr))),
        fmt_sig(mean(on.iter().map(|r| r.reroute_count as f64))),
    ]);
    rows
}

fn pdr_summary(reports: &[RunReport]) -> String {
    let min = reports.iter().map(|r| r.pdr).fold(f64::INFINITY, f64::min);
    let max = reports
        .iter()
        .map(|r| r.pdr)
        .fold(f64::NEG_INFINITY, f64::max);
    format!(
        "pdr mean={} min={} max={} over {} seeds",
        fmt_sig(mean(reports.iter().map(|r| r.pdr))),
        fmt_sig(min),
        fmt_sig(max),
        reports.len()
    )
}

fn run_single(args: &RunArgs) -> Result<(), CliError> {
    let config = load_config(&args.config)?;
    let mut sim = Simulation::new(&config, args.seed)?;
    if args.no_search_stats {
        sim = sim.without_search_stats();
    }
    sim.run_to_end();
    let report = sim.report();

    let format = match args.format {
        Some(FormatArg::Json) => ReportFormat::Json,
        Some(FormatArg::Csv) => ReportFormat::Csv,
        None => config.output.format,
    };
    let out = args.out.as_deref().or(config.output.path.as_deref());
    let mut bytes = Vec::new();
    emit_report(&report, format, &mut bytes).map_err(io_err(Path::new("<report>")))?;
    write_to(out, &bytes)?;

    if let Some(p) = &args.eta_out {
        let mut buf = Vec::new();
        sim.state()
            .eta
            .write_csv(&sim.state().net, &mut buf)
            .map_err(|e| io_err(p)(io::Error::other(e)))?;
        write_to(Some(p), &buf)?;
    }
    if let Some(p) = &args.stats_out {
        let stats = report
            .searches
            .last()
            .map(|s| s.stats.as_slice())
            .unwrap_or_default();
        let mut buf = Vec::new();
        crate::ants::IterationStats::write_csv(stats, &mut buf)
            .map_err(|e| io_err(p)(io::Error::other(e)))?;
        write_to(Some(p), &buf)?;
    }
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let config = load_config(&args.config)?;
    let reports = run_seeds(&config, args.seeds.clone())?;
    write_to(
        args.out.as_deref(),
        &csv_bytes(&SWEEP_COLUMNS, &sweep_rows(&reports))?,
    )?;
    eprintln!("{}", pdr_summary(&reports));
    Ok(())
}

fn run_compare(args: &SweepArgs) -> Result<(), CliError> {
    let config = load_config(&args.config)?;
    let arm = |reroute: bool| {
        let mut c = config.clone();
        c.traffic.reroute = reroute;
        run_seeds(&c, args.seeds.clone())
    };
    let on = arm(true)?;
    let off = arm(false)?;
    write_to(
        args.out.as_deref(),
        &csv_bytes(&COMPARE_COLUMNS, &compare_rows(&on, &off))?,
    )?;
    eprintln!("reroute on:  {}", pdr_summary(&on));
    eprintln!("reroute off: {}", pdr_summary(&off));
    Ok(())
}

pub fn run_command(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(a) => run_single(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Compare(a) => run_compare(a),
    }
}
