//! `analyze`: deterministic reports over the dominated-splitting toolkit.
//!
//! Four subcommands share one TOML profile format: `scan` maps the
//! critical structure of a model, `splitting` builds and certifies a
//! dominated splitting along an orbit segment, `conecheck` re-derives
//! the splitting through invariant cones, and `perturb` measures the
//! rotation budgets that destroy domination. Reports are byte-stable:
//! identical profile and seed produce identical output.

mod config;
mod emit;
mod pipeline;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::ConfigError;
use crate::pipeline::{CommandKind, PipelineError};

#[derive(Parser)]
#[command(
    name = "analyze",
    version,
    about = "Construct and certify dominated splittings for torus endomorphisms \
             with critical points"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a grid for rank drops of the iterated differential
    Scan(RunArgs),
    /// Build a candidate splitting along an orbit and certify it
    Splitting(RunArgs),
    /// Check cone-field invariance and near-critical contraction
    Conecheck(RunArgs),
    /// Measure mixing lengths and raise kernels by small rotations
    Perturb(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Analysis profile (TOML)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; single-format output goes to stdout when omitted
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Output formats, comma separated
    #[arg(long, value_delimiter = ',', default_value = "json")]
    format: Vec<Format>,
    /// Seed for sampled probes (cone directions, uniqueness, corpora)
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads; defaults to ANALYZE_THREADS, then 1
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// A failure with its exit code: 2 for profile and usage problems,
/// 3 for analyses that ran and failed.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: String) -> Self {
        Failure { code: 2, message }
    }

    fn analysis(message: String) -> Self {
        Failure { code: 3, message }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::config(e.to_string())
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(_) => Failure::config(e.to_string()),
            PipelineError::Analysis(_) => Failure::analysis(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("analyze: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (kind, args) = match &cli.command {
        Command::Scan(a) => (CommandKind::Scan, a),
        Command::Splitting(a) => (CommandKind::Splitting, a),
        Command::Conecheck(a) => (CommandKind::Conecheck, a),
        Command::Perturb(a) => (CommandKind::Perturb, a),
    };
    let _threads = resolve_threads(args.threads)?;

    let mut formats = args.format.clone();
    formats.dedup();
    if formats.contains(&Format::Csv)
        && !matches!(kind, CommandKind::Splitting | CommandKind::Conecheck)
    {
        return Err(Failure::config(
            "csv curves are only emitted by the splitting and conecheck commands".to_string(),
        ));
    }
    if args.out.is_none() && formats.len() > 1 {
        return Err(Failure::config(
            "writing more than one format needs --out <dir>".to_string(),
        ));
    }

    let cfg = config::load(&args.config)?;
    let started = Instant::now();
    let outcome = pipeline::run(kind, &cfg, args.seed)?;

    for format in &formats {
        let bytes = match format {
            Format::Json => emit::to_canonical_json(&outcome.report),
            Format::Csv => {
                let rows = outcome
                    .report
                    .splitting
                    .as_ref()
                    .map(|s| s.rows.as_slice())
                    .unwrap_or(&[]);
                emit::rows_to_csv(rows)
            }
        };
        match &args.out {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| {
                    Failure::config(format!("cannot create {}: {e}", dir.display()))
                })?;
                let name = match format {
                    Format::Json => "report.json",
                    Format::Csv => "curves.csv",
                };
                let path = dir.join(name);
                std::fs::write(&path, &bytes).map_err(|e| {
                    Failure::config(format!("cannot write {}: {e}", path.display()))
                })?;
                eprintln!("wrote {}", path.display());
            }
            None => {
                std::io::stdout().write_all(&bytes).map_err(|e| {
                    Failure::analysis(format!("cannot write to stdout: {e}"))
                })?;
            }
        }
    }
    eprintln!("elapsed_ms={}", started.elapsed().as_millis());

    if outcome.certificate_demand_failed {
        return Err(Failure::analysis(
            "the profile demands a passing certificate and the analysis did not achieve one"
                .to_string(),
        ));
    }
    Ok(())
}

/// Thread-count resolution: flag, then `ANALYZE_THREADS`, then 1. The
/// analyses are currently single-threaded; the value is validated so
/// profiles stay forward-compatible with a sharded runner.
fn resolve_threads(flag: Option<usize>) -> Result<usize, Failure> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var("ANALYZE_THREADS") {
            Ok(text) => text.trim().parse::<usize>().map_err(|_| {
                Failure::config(format!(
                    "ANALYZE_THREADS must be a positive integer, got {text:?}"
                ))
            })?,
            Err(_) => 1,
        },
    };
    if n == 0 {
        return Err(Failure::config("thread count must be at least 1".to_string()));
    }
    Ok(n)
}
