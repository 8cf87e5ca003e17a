mod checkpoint;
mod commands;
mod config;
mod manifest;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::error;

#[derive(Debug, Parser)]
#[command(name = "mprim", version, about = "Learn context-conditioned movement primitives from demonstrations")]
pub struct Cli {
    /// TOML file with defaults for any flag (flags win).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic demonstration dataset as JSONL.
    Generate(GenerateArgs),
    /// Train a model and write a checkpoint plus its loss curve.
    Train(TrainArgs),
    /// Score a checkpoint and emit metrics and plot data.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Rtp,
    Wpp,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    /// Falls back to the config file, then MPRIM_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Standard deviation of additive joint noise (rad).
    #[arg(long)]
    pub noise: Option<f64>,
    /// WPP repetitions per pattern and configuration.
    #[arg(long)]
    pub trials: Option<usize>,
    /// RTP samples per region A,B,C,D.
    #[arg(long, value_delimiter = ',')]
    pub counts: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_parser = ["deep-mp", "residual", "ddmp", "ridge"])]
    pub method: Option<String>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Output head for d-DMP: rtp learns weights and goal, wpp also the start.
    #[arg(long, value_enum)]
    pub task: Option<Kind>,
    /// Fixed WPP split such as WPP4; a seeded random split otherwise.
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long)]
    pub n_basis: Option<usize>,
    #[arg(long)]
    pub dmp_basis: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Ridge penalty of the linear baseline.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long, value_parser = ["per-region", "global"])]
    pub residual_scope: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Evaluate the test side of a WPP split instead of the stored split.
    #[arg(long, conflicts_with = "all")]
    pub split: Option<String>,
    /// Evaluate every sample of the dataset.
    #[arg(long)]
    pub all: bool,
    /// Kinematic chain TOML for end-effector errors and paths.
    #[arg(long)]
    pub chain: Option<PathBuf>,
    /// Dataset indices to emit plot files for.
    #[arg(long, value_delimiter = ',')]
    pub plot_samples: Option<Vec<usize>>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = config::FileConfig::load(cli.config.as_deref()).and_then(|file| match &cli.command {
        Command::Generate(a) => commands::generate::run(a, &file),
        Command::Train(a) => commands::train::run(a, &file),
        Command::Eval(a) => commands::eval::run(a, &file),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}
