//! `sbc-lab`: run simulation-based calibration experiments on the bundled
//! models and write rank tables, reports and plots.
//!
//! Exit status of `run`: 0 when every quantity passes at 5%, 2 when any
//! fails, 1 on usage or execution errors.

mod config;
mod experiment;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sbc_models::bernoulli::{discrete_sbc_scan, q_curve, AnalyticQuantity, QuantileFamily};
use sbc_models::gaussian::{self, GaussianVariant};
use sbc_models::simplex::{self, OrderedSimplexVariant};

use config::{ExperimentConfig, Model, PartialConfig, QuantitySelection};

#[derive(Parser)]
#[command(name = "sbc-lab", version, about = "Simulation-based calibration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write ranks.csv, report.json, evolution.csv and plots.
    Run(RunArgs),
    /// Search two-point posteriors of the Bernoulli model that pass SBC.
    ScanDiscrete(ScanArgs),
    /// List models, variants and quantities.
    List,
    /// Write the exact rank-CDF curve q(x) of a Bernoulli posterior family.
    QCurve(QCurveArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    model: Option<Model>,
    /// Posterior variant (family name for the bernoulli model).
    #[arg(long)]
    variant: Option<String>,
    /// Observations per dataset (gaussian only).
    #[arg(long)]
    n: Option<usize>,
    /// Number of simulations S.
    #[arg(long)]
    sims: Option<usize>,
    /// Posterior draws per simulation M.
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    thin: Option<usize>,
    /// Comma-separated quantity names, or `default`.
    #[arg(long)]
    quantities: Option<String>,
    /// Prefix step of the evolution trace.
    #[arg(long)]
    step: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file with the same fields as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Leave the generation-time comment out of SVG files.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, default_value_t = 200)]
    resolution: usize,
    #[arg(long, default_value = "sbc-out")]
    out: PathBuf,
}

#[derive(Args)]
struct QCurveArgs {
    #[arg(long, default_value = "correct")]
    family: String,
    #[arg(long, default_value = "theta")]
    quantity: String,
    #[arg(long, default_value_t = 200)]
    grid: usize,
    #[arg(long, default_value = "sbc-out")]
    out: PathBuf,
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("SBC_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .with_context(|| format!("SBC_LAB_THREADS must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let file = match &args.config {
        Some(path) => PartialConfig::from_file(path)?,
        None => PartialConfig::default(),
    };
    let flags = PartialConfig {
        model: args.model,
        variant: args.variant,
        n: args.n,
        sims: args.sims,
        draws: args.draws,
        seed: args.seed,
        thin: args.thin,
        quantities: args.quantities.as_deref().map(QuantitySelection::parse_flag),
        step: args.step,
        out: args.out,
    };
    let config = ExperimentConfig::try_from(file.overlay(flags))?;
    let timestamp = (!args.no_timestamp).then(|| {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        format!("unix time {secs}")
    });

    let summary = experiment::run_experiment(&config, timestamp.as_deref())?;
    let mut stdout = std::io::stdout().lock();
    for e in &summary.entries {
        writeln!(
            stdout,
            "{:<16} log(gamma/gamma_bar) {:>9.3}  chi2 p {:.3}  {}",
            e.quantity,
            e.log_ratio,
            e.chi2_p,
            if e.pass_5pct { "pass" } else { "FAIL" }
        )?;
    }
    if summary.failed_simulations > 0 {
        eprintln!("{} of {} simulations failed and were excluded", summary.failed_simulations, config.sims);
    }
    Ok(if summary.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_scan(args: ScanArgs) -> Result<ExitCode> {
    let points = discrete_sbc_scan(args.resolution)?;
    write_csv(&args.out, "scan.csv", &points)?;
    for p in &points {
        println!("a = {:.6}  b = {:.6}  residual {:.2e}", p.a, p.b, p.residual);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_q_curve(args: QCurveArgs) -> Result<ExitCode> {
    let family = QuantileFamily::from_name(&args.family)?;
    let quantity = AnalyticQuantity::from_name(&args.quantity)?;
    if args.grid < 2 {
        bail!("--grid must be at least 2");
    }
    let points = q_curve(&family, quantity, args.grid);
    write_csv(&args.out, &format!("q_{}_{}.csv", args.family, args.quantity), &points)?;
    Ok(ExitCode::SUCCESS)
}

fn write_csv<T: serde::Serialize>(dir: &Path, name: &str, rows: &[T]) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)
        .with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

fn sorted(names: impl IntoIterator<Item = impl Into<String>>) -> String {
    let mut v: Vec<String> = names.into_iter().map(Into::into).collect();
    v.sort();
    v.join(", ")
}

fn cmd_list() -> Result<ExitCode> {
    let mut out = std::io::stdout().lock();
    let analytic = AnalyticQuantity::ALL.iter().map(|q| q.name());
    writeln!(out, "bernoulli")?;
    writeln!(out, "  families: {}", sorted(QuantileFamily::NAMES))?;
    writeln!(out, "  quantities: {}", sorted(analytic))?;
    writeln!(out, "gaussian")?;
    writeln!(out, "  variants: {}", sorted(GaussianVariant::NAMES))?;
    writeln!(out, "  quantities: {}", sorted(gaussian::ALL_QUANTITIES))?;
    writeln!(out, "  default quantities: {}", sorted(gaussian::DEFAULT_QUANTITIES))?;
    writeln!(out, "simplex")?;
    writeln!(out, "  variants: {}", sorted(OrderedSimplexVariant::ALL.map(|v| v.name())))?;
    writeln!(out, "  quantities: {}", sorted(simplex::QUANTITIES))?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::ScanDiscrete(args) => cmd_scan(args),
        Command::List => cmd_list(),
        Command::QCurve(args) => cmd_q_curve(args),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
