//! `aimix` — build human-vs-AI word benchmarks, estimate AI-modified
//! text shares, and analyze how pooled benchmarks bias group
//! comparisons.

mod commands;
mod config;
mod manifest;
mod outputs;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{FileConfig, defaults, resolve};

#[derive(Parser)]
#[command(
    name = "aimix",
    version,
    about = "Corpus forensics: AI-likeness benchmarks, mixture-weight estimation, \
             permutation nulls, and de-biasing analytics"
)]
struct Cli {
    /// Worker threads (0 = machine parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// TOML config file supplying defaults for any flag
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Root random seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build pooled and/or group-specific benchmarks from a paired corpus
    BuildBench(commands::build_bench::Args),
    /// Fill in AI-rephrased twins for a corpus
    Rephrase(commands::rephrase::Args),
    /// Estimate alpha per group and period under a benchmark
    Estimate(commands::estimate::Args),
    /// Run a permutation null (label or membership design)
    Simulate(commands::simulate::Args),
    /// Aggregate estimates into yearly averages and de-biasing ratios
    Analyze(commands::analyze::Args),
    /// Generate a synthetic labeled corpus
    Synth(commands::synth::Args),
    /// Cross-group log-odds statistics for tracked words
    WordStats(commands::word_stats::Args),
}

/// Usage problems exit 1; runtime failures exit 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<aimix_core::Error> for CliError {
    fn from(e: aimix_core::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

/// Everything resolved at the top level that commands may consult.
pub struct Ctx {
    pub file: FileConfig,
    pub seed: u64,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    match run(cli) {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let threads = resolve(cli.threads, file.threads, defaults::THREADS);
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Runtime(anyhow::anyhow!("thread pool: {e}")))?;
    }
    let ctx = Ctx {
        seed: resolve(cli.seed, file.seed, defaults::SEED),
        file,
    };
    match cli.command {
        Command::BuildBench(args) => commands::build_bench::run(args, &ctx),
        Command::Rephrase(args) => commands::rephrase::run(args, &ctx),
        Command::Estimate(args) => commands::estimate::run(args, &ctx),
        Command::Simulate(args) => commands::simulate::run(args, &ctx),
        Command::Analyze(args) => commands::analyze::run(args, &ctx),
        Command::Synth(args) => commands::synth::run(args, &ctx),
        Command::WordStats(args) => commands::word_stats::run(args, &ctx),
    }
}
