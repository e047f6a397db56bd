use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use superfock::harness::{run_suite, OutputFormat, RunConfig};
use superfock::Error;

/// Verification harness for super-product systems and CAR flows on finite grids.
#[derive(Debug, Parser)]
#[command(name = "superfock", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run check suites and write a report.
    Run(RunArgs),
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Suite to run: fock-check, sps-check, cohomology-check, two-index, car-check or all.
    /// Repeat or separate with commas.
    #[arg(long, value_delimiter = ',')]
    suite: Vec<String>,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    dim_k: Option<usize>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// json, markdown or both.
    #[arg(long)]
    format: Option<String>,
}

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn load_config(args: &RunArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if !args.suite.is_empty() {
        cfg.suites = args.suite.clone();
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.cells {
        cfg.n_cells = v;
    }
    if let Some(v) = args.dim_k {
        cfg.dim_k = v;
    }
    if let Some(v) = args.t_max {
        cfg.t_max = v;
    }
    if let Some(v) = &args.out {
        cfg.out = v.clone();
    }
    if let Some(v) = &args.format {
        cfg.format = OutputFormat::parse(v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: RunArgs) -> ExitCode {
    let cfg = match load_config(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("superfock: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let report = match run_suite(&cfg) {
        Ok(r) => r,
        Err(e @ Error::Config(_)) => {
            eprintln!("superfock: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
        Err(e) => {
            eprintln!("superfock: {e}");
            return ExitCode::from(EXIT_FAILED);
        }
    };
    for r in &report.records {
        println!("{:<18} {} = {}", r.status.label(), r.id, value_text(&r.value));
    }
    if let Err(e) = report.emit(&cfg.out, cfg.format) {
        eprintln!("superfock: {e}");
        return ExitCode::from(EXIT_FAILED);
    }
    let failed = report
        .records
        .iter()
        .filter(|r| !matches!(r.status.label(), "pass" | "informational"))
        .count();
    println!("{} checks, {failed} failed; report in {}", report.records.len(), cfg.out.display());
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED)
    }
}

fn value_text(v: &superfock::harness::Param) -> String {
    match v {
        superfock::harness::Param::Int(i) => i.to_string(),
        superfock::harness::Param::Float(x) => format!("{x:.3e}"),
        superfock::harness::Param::Text(s) => s.clone(),
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run(args),
    }
}
