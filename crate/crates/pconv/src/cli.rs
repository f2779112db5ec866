//! Flag definitions for the `pconv` binary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "pconv",
    version,
    about = "Congruence classification over the prime grid: datasets, training, prediction, verification, sweeps"
)]
pub struct Cli {
    /// Optional `key = value` config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the smooth-anchor dataset and write its cache file.
    Dataset(DatasetArgs),
    /// Train a model and write checkpoint, report, and CSV artifacts.
    Train(TrainArgs),
    /// Print the theoretical verdict for a (m, B) pair.
    Predict(PredictArgs),
    /// Train, analyze the confusion matrix, and check it against the
    /// prediction; exit 0 only when they agree.
    Verify(TrainArgs),
    /// Run (m, B, k) grids and emit a CSV of predicted and measured
    /// accuracies.
    Sweep(SweepArgs),
}

#[derive(Debug, Args, Clone)]
pub struct ScaleArgs {
    /// Dataset upper bound (exclusive).
    #[arg(long)]
    pub limit: Option<u64>,
    /// Prime basis size N.
    #[arg(long)]
    pub nprimes: Option<usize>,
    /// Context window length B.
    #[arg(long = "B")]
    pub context_len: Option<usize>,
    /// Dataset cache file path (default: derived under $PCONV_CACHE_DIR).
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[command(flatten)]
    pub scale: ScaleArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub scale: ScaleArgs,
    /// Classification modulus m (>= 2).
    #[arg(long = "m")]
    pub modulus: u64,
    /// Kernel size k (<= B).
    #[arg(long = "k")]
    pub kernel: Option<usize>,
    /// Training batches per epoch r.
    #[arg(long = "r")]
    pub batches: Option<usize>,
    /// Batch size s.
    #[arg(long = "s")]
    pub batch_size: Option<usize>,
    /// Training epochs t.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Run seed; fixes the batch plan and the initial weights.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for batch gradients (1 = fully sequential).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory for run artifacts.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Build the dataset in-process when the cache file is missing.
    #[arg(long)]
    pub build: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Classification modulus m (>= 2).
    #[arg(long = "m")]
    pub modulus: u64,
    /// Context window length B (>= 2).
    #[arg(long = "B")]
    pub context_len: Option<usize>,
    /// Emit a CSV row instead of the text report.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scale: ScaleArgs,
    /// Moduli: a comma list (`5,13,22`) or an inclusive range (`2..30`).
    #[arg(long = "m-range", default_value = "2..30")]
    pub m_range: String,
    /// Context lengths to sweep.
    #[arg(long = "B-list", default_value = "8,16,24")]
    pub b_list: String,
    /// Kernel sizes to sweep (pairs with k > B are skipped).
    #[arg(long = "k-list", default_value = "7,15")]
    pub k_list: String,
    /// Only compute predictions; leave the measured column empty.
    #[arg(long)]
    pub predict_only: bool,
    #[arg(long = "r")]
    pub batches: Option<usize>,
    #[arg(long = "s")]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// CSV output path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Build missing dataset caches in-process.
    #[arg(long)]
    pub build: bool,
}
