use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scour_core::nn::Activation;
use scour_core::train::{BatchSize, Preset};

/// Environment variable that supplies the default `--seed`.
pub const SEED_ENV: &str = "SCOUR_SEED";
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_N_TRAIN: usize = 154;

#[derive(Debug, Parser)]
#[command(
    name = "scour",
    version,
    about = "Pier-scour depth regression with feedforward neural networks"
)]
pub struct Cli {
    /// Output style: aligned tables or one JSON object per line.
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    JsonLines,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset with the seven-feature schema.
    Synth(SynthArgs),
    /// Per-column min, max, mean and standard deviation of a dataset.
    Summarize(SummarizeArgs),
    /// Split, train one model, evaluate it on the held-out records.
    Train(Box<TrainArgs>),
    /// Train both presets on the same split and compare test metrics.
    Compare(CompareArgs),
    /// Verify backpropagation against central finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of records.
    #[arg(long, default_value_t = 232)]
    pub n: usize,
    #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Destination CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest path [default: <out>.manifest]
    #[arg(long)]
    pub out_manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Summarize the train and test partitions separately.
    #[arg(long)]
    pub split: bool,
    #[arg(long, default_value_t = DEFAULT_N_TRAIN, requires = "split")]
    pub n_train: usize,
    #[arg(long, default_value_t = DEFAULT_SEED, requires = "split")]
    pub split_seed: u64,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Training seed (initialization, shuffling, dropout).
    #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Seed for the train/test partition.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub split_seed: u64,
    /// Records used for training; the rest are the test set.
    #[arg(long, default_value_t = DEFAULT_N_TRAIN)]
    pub n_train: usize,
    /// Directory for every output file.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub split: SplitArgs,
    /// dnn_paper or bpnn_paper.
    #[arg(long, default_value = "dnn_paper")]
    pub preset: Preset,
    /// Model file [default: <out-dir>/model.txt]
    #[arg(long)]
    pub out_model: Option<PathBuf>,
    /// History CSV [default: <out-dir>/history.csv]
    #[arg(long)]
    pub out_history: Option<PathBuf>,
    /// Predictions CSV [default: <out-dir>/predictions.csv]
    #[arg(long)]
    pub out_predictions: Option<PathBuf>,
    /// Manifest [default: <out-dir>/manifest.txt]
    #[arg(long)]
    pub out_manifest: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Every field here replaces the corresponding preset value when given.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// Hidden layer widths, e.g. 100,80,50.
    #[arg(long, value_delimiter = ',', help_heading = "Overrides")]
    pub hidden: Option<Vec<usize>>,
    /// Hidden activation: relu, sigmoid, tanh or identity.
    #[arg(long, help_heading = "Overrides")]
    pub activation: Option<Activation>,
    /// Output activation.
    #[arg(long, help_heading = "Overrides")]
    pub output_activation: Option<Activation>,
    /// Inverted-dropout rate on hidden layers, in [0, 1).
    #[arg(long, help_heading = "Overrides")]
    pub dropout: Option<f64>,
    #[arg(long, value_enum, help_heading = "Overrides")]
    pub init: Option<InitKind>,
    /// Half-width of the uniform initializer.
    #[arg(long, help_heading = "Overrides")]
    pub halfwidth: Option<f64>,
    #[arg(long, value_enum, help_heading = "Overrides")]
    pub updater: Option<UpdaterKind>,
    /// Learning rate (Adam alpha or momentum SGD step size).
    #[arg(long, help_heading = "Overrides")]
    pub lr: Option<f64>,
    /// Momentum coefficient (momentum updater only).
    #[arg(long, help_heading = "Overrides")]
    pub momentum: Option<f64>,
    #[arg(long, help_heading = "Overrides")]
    pub beta1: Option<f64>,
    #[arg(long, help_heading = "Overrides")]
    pub beta2: Option<f64>,
    /// Adam epsilon.
    #[arg(long, help_heading = "Overrides")]
    pub eps: Option<f64>,
    /// Records per update, or `full`.
    #[arg(long, help_heading = "Overrides")]
    pub batch_size: Option<BatchSize>,
    /// Train for this many epochs.
    #[arg(long, conflicts_with = "updates", help_heading = "Overrides")]
    pub epochs: Option<usize>,
    /// Train for this many updater steps.
    #[arg(long, help_heading = "Overrides")]
    pub updates: Option<usize>,
    /// Keep the training order fixed instead of reshuffling every epoch.
    #[arg(long, help_heading = "Overrides")]
    pub no_shuffle: bool,
    /// Record history every this many epochs.
    #[arg(long, help_heading = "Overrides")]
    pub history_every: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitKind {
    Xavier,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UpdaterKind {
    Adam,
    Momentum,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub split: SplitArgs,
    /// Train both models one after the other instead of on two threads.
    #[arg(long)]
    pub sequential: bool,
    /// Shorten both runs to this many epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Which network to check: sigmoid, relu, identity, or all.
    #[arg(long, value_enum, default_value_t = GradcheckNet::All)]
    pub net: GradcheckNet,
    #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, hide = true)]
    pub corrupt_backward: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GradcheckNet {
    Sigmoid,
    Relu,
    Identity,
    All,
}
