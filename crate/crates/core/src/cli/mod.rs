//! Command-line surface: argument definitions and dispatch.

mod commands;
mod manifest;
mod settings;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

pub use commands::{
    cmd_ablate, cmd_eval, cmd_sweep, cmd_train, parse_layer_list, CHECKPOINT_FILE, EPOCH_LOG_FILE,
    MANIFEST_FILE, REPORT_FILE, SWEEP_FILE,
};
pub use manifest::{sha256_file, InputDigest, RunManifest};
pub use settings::RunSettings;

#[derive(Debug, Parser)]
#[command(
    name = "eegcn",
    version,
    about = "Aspect-based sentiment classification over dependency graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a classifier and write manifest, checkpoint, epoch log, report
    Train(TrainCmd),
    /// Evaluate a checkpoint on a test split, report JSON on stdout
    Eval(EvalArgs),
    /// Train once per layer count and write a layers,acc,macro_f1 CSV
    Sweep(SweepCmd),
    /// Train a single ablation variant
    Ablate(AblateCmd),
}

/// Inputs and settings shared by every training-style command.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// Training examples (JSON lines)
    #[arg(long)]
    pub train: PathBuf,
    /// Test examples (JSON lines)
    #[arg(long)]
    pub test: PathBuf,
    /// Dependency parses for the training file (CoNLL-U, block i = line i)
    #[arg(long = "parses-train")]
    pub parses_train: PathBuf,
    /// Dependency parses for the test file
    #[arg(long = "parses-test")]
    pub parses_test: PathBuf,
    /// Pretrained embeddings, GloVe text format
    #[arg(long)]
    pub glove: PathBuf,
    /// Flat key = value configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for run artifacts
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long = "batch-size")]
    pub batch_size: Option<usize>,
    #[arg(long = "learning-rate")]
    pub learning_rate: Option<f64>,
    /// L2 coefficient
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long = "gcn-layers")]
    pub gcn_layers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainCmd {
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Checkpoint written by `train` or `ablate`
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long = "parses-test")]
    pub parses_test: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepCmd {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated layer counts, e.g. 1,2,3
    #[arg(long)]
    pub layers: String,
}

#[derive(Debug, Args)]
pub struct AblateCmd {
    #[command(flatten)]
    pub data: DataArgs,
    /// One of: full, no-dependency, no-edge-weight, no-bidirectional
    #[arg(long)]
    pub variant: String,
}

/// Dispatch a parsed command line.
pub fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Train(cmd) => cmd_train(&cmd.data),
        Command::Eval(args) => cmd_eval(args),
        Command::Sweep(cmd) => cmd_sweep(&cmd.data, &cmd.layers),
        Command::Ablate(cmd) => cmd_ablate(&cmd.data, &cmd.variant),
    }
}
