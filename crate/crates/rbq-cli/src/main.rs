//! `rbq` — queueing analytics and verifying simulation from JSON model
//! configs.
//!
//! ```text
//! rbq analyze  <config.json> [--format json|csv] [--out PATH]
//! rbq simulate <config.json> [--format json|csv] [--out PATH] [--seed U64] [--threads N]
//! rbq verify   <config.json> [--format json|csv] [--out PATH] [--seed U64] [--threads N]
//! ```
//!
//! Exit codes: 0 success (verify: all checks passed), 1 verify found a
//! failing check, 2 invalid configuration, 3 unstable model, 4 numeric
//! failure. Set `RBQ_LOG=debug` (or another level) for diagnostics.

mod commands;
mod config;
mod report;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rbq::error::Error;

use crate::config::RunConfig;
use crate::report::ToCsv;

#[derive(Parser)]
#[command(name = "rbq", version, about = "Queueing analytics with a verifying simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form steady state: sigma, epoch distributions, residual
    /// transforms on the s-grid.
    Analyze(RunArgs),
    /// Discrete-event simulation with rate-balance trackers and two-step
    /// transition counters; deterministic for a fixed seed.
    Simulate(RunArgs),
    /// Analyze + simulate, then a PASS/FAIL table comparing them.
    Verify(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON model configuration.
    config: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Cap worker threads (0 = one per core).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Domain(_) | Error::Partition(_) => 2,
        Error::Instability(_) => 3,
        _ => 4,
    }
}

fn load_config(path: &PathBuf) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let config: RunConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    config.validate()?;
    Ok(config)
}

fn render<T: serde::Serialize + ToCsv>(report: &T, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serialization");
            s.push('\n');
            s
        }
        Format::Csv => report.to_csv(),
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), Error> {
    match out {
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Error::Config(format!("cannot write to stdout: {e}")))
        }
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Analyze(args) => {
            let config = load_config(&args.config)?;
            let report = commands::analyze(&config)?;
            emit(&render(&report, args.format), &args.out)?;
            Ok(0)
        }
        Command::Simulate(args) => {
            let config = load_config(&args.config)?;
            let report = commands::simulate_report(&config, args.seed, args.threads)?;
            emit(&render(&report, args.format), &args.out)?;
            Ok(0)
        }
        Command::Verify(args) => {
            let config = load_config(&args.config)?;
            let report = commands::verify(&config, args.seed, args.threads)?;
            let code = if report.all_passed { 0 } else { 1 };
            emit(&render(&report, args.format), &args.out)?;
            Ok(code)
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("RBQ_LOG")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(exit_code(&err));
        }
    }
}
