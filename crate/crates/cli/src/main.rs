//! `cautious`: runs DLRC-OMWU experiments and the property suites.
//!
//! Exit status is 0 on success, 1 when a run or check fails and 2 on a
//! usage error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "cautious",
    version,
    about = "Optimistic MWU with dynamic learning-rate control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Every player runs the same learner on a normal-form game.
    Selfplay(SelfplayArgs),
    /// One learner against a scripted adversary, safeguard armed.
    Adversarial(AdversarialArgs),
    /// Sampling-based property suites.
    Verify(VerifyArgs),
    /// Kernelized learner on a 0/1 polytope with a scripted stream.
    KernelDemo(KernelDemoArgs),
}

/// Learner constants shared by the run commands.
#[derive(Debug, Args)]
struct RateArgs {
    /// Learner: dlrc, omwu or mwu.
    #[arg(long)]
    algo: Option<String>,
    /// Number of rounds.
    #[arg(short = 'T', long = "rounds")]
    rounds: Option<usize>,
    /// Rate cap; defaults to min{1/50, 1/(12√2 L n)}.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Smoothness L of the utilities.
    #[arg(short = 'L', long)]
    smoothness: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Allow eta > 1/50 or beta < 70.
    #[arg(long)]
    unsafe_params: bool,
    /// Metrics CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write every k-th round instead of the checkpoints.
    #[arg(long)]
    log_every: Option<usize>,
    /// TOML file with the same keys as the long flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelfplayArgs {
    /// One of the built-in games.
    #[arg(long, conflicts_with_all = ["game", "random"])]
    named: Option<String>,
    /// Game JSON file.
    #[arg(long, conflicts_with = "random")]
    game: Option<PathBuf>,
    /// Random game with payoffs uniform on [-1, 1], drawn from --seed.
    #[arg(long)]
    random: bool,
    #[arg(long)]
    players: Option<usize>,
    /// Actions per player of a random game.
    #[arg(long)]
    actions: Option<usize>,
    /// Arm the safeguard check.
    #[arg(long)]
    safeguard: bool,
    #[command(flatten)]
    rate: RateArgs,
}

#[derive(Debug, Args)]
struct AdversarialArgs {
    /// alternating, best-response, random or constant.
    #[arg(long)]
    adversary: Option<String>,
    #[arg(long)]
    actions: Option<usize>,
    /// Game size used for the safeguard threshold.
    #[arg(long)]
    players: Option<usize>,
    #[command(flatten)]
    rate: RateArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Suite name or `all`.
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict sampling to one dimension.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct KernelDemoArgs {
    /// simplex, hypercube or mset.
    #[arg(long)]
    polytope: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    /// Vertex weight of an m-set polytope.
    #[arg(long)]
    m: Option<usize>,
    #[arg(short = 'T', long = "rounds")]
    rounds: Option<usize>,
    /// Scale of the scripted utilities.
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    unsafe_params: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Failed(_) => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Selfplay(a) => commands::selfplay(a),
        Command::Adversarial(a) => commands::adversarial(a),
        Command::Verify(a) => commands::verify(a),
        Command::KernelDemo(a) => commands::kernel_demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("error: {m}"),
                CliError::Failed(m) => eprintln!("check failed: {m}"),
            }
            ExitCode::from(e.code())
        }
    }
}
