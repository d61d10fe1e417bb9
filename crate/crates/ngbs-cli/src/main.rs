//! Command-line driver for heralded non-Gaussian boson sampling.
//!
//! Exit codes: 0 on success, 2 for configuration problems (unreadable or
//! invalid files, bad flag combinations), 3 for numeric failures (oracle
//! disagreement under `--strict`, non-physical intermediate values).

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Failure classes, mapped onto exit codes in `main`.
#[derive(Debug)]
pub(crate) enum CliError {
    /// Bad input: exit code 2.
    Config(String),
    /// Numeric failure in an otherwise valid run: exit code 3.
    Numeric(String),
}

impl From<ngbs::Error> for CliError {
    fn from(e: ngbs::Error) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Numeric(msg) => f.write_str(msg),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "ngbs",
    about = "Exact boson sampling from heralded non-Gaussian sources",
    version
)]
struct Cli {
    /// Size of the rayon thread pool (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Path to the experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Report displacement parameters, herald probabilities, heralded
    /// amplitudes, and fidelities for every source in the configuration.
    Prepare {
        #[command(flatten)]
        io: ConfigArgs,
        /// Override the configured photon-number cutoff.
        #[arg(long)]
        cutoff: Option<usize>,
    },
    /// Tabulate conditional probabilities for all patterns up to the cutoff.
    Probs {
        #[command(flatten)]
        io: ConfigArgs,
        /// Override the configured photon-number cutoff.
        #[arg(long)]
        cutoff: Option<usize>,
        /// Also evaluate every pattern with the truncated Fock oracle.
        #[arg(long)]
        oracle: bool,
        /// With --oracle, fail (exit 3) if any pattern disagrees by more
        /// than 1e-6.
        #[arg(long, requires = "oracle")]
        strict: bool,
    },
    /// Draw photon-count samples, one space-separated pattern per line.
    Sample {
        #[command(flatten)]
        io: ConfigArgs,
        /// Number of samples to draw.
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Override the seed from the configuration file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Time low-rank evaluation against full enumeration on random
    /// instances and report the relative residuals.
    BenchRank {
        /// Matrix sizes to benchmark.
        #[arg(long, value_delimiter = ',', default_value = "8,12,16")]
        sizes: Vec<usize>,
        /// Ranks to benchmark.
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        ranks: Vec<usize>,
        /// Trials per (size, rank) cell.
        #[arg(long, default_value_t = 3)]
        trials: usize,
        /// Seed for instance generation.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay the built-in oracle-equivalence suite.
    Selftest {
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Prepare { io, cutoff } => {
            let cfg = config::ExperimentConfig::load(&io.config)?;
            commands::prepare(&cfg, cutoff, io.out.as_deref())
        }
        Command::Probs { io, cutoff, oracle, strict } => {
            let cfg = config::ExperimentConfig::load(&io.config)?;
            commands::probs(&cfg, cutoff, oracle, strict, io.out.as_deref())
        }
        Command::Sample { io, count, seed } => {
            let cfg = config::ExperimentConfig::load(&io.config)?;
            commands::sample(&cfg, count, seed, io.out.as_deref())
        }
        Command::BenchRank { sizes, ranks, trials, seed, out } => {
            commands::bench_rank(&sizes, &ranks, trials, seed, out.as_deref())
        }
        Command::Selftest { out } => commands::selftest(out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
