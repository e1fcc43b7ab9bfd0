use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use commdyn_core::{CombineMode, EpsilonMode, Label, Pair};

#[derive(Debug, Parser)]
#[command(
    name = "commdyn",
    version,
    about = "Communication episodes between entity pairs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an event file; prints normalised `sender receiver timestamp` lines, or the parse report.
    Ingest(IngestArgs),
    /// List pairs by message count.
    Pairs(PairsArgs),
    /// Detect episodes and compute their features.
    Episodes(EpisodesArgs),
    /// Incoming and outgoing densities of one pair, for plotting.
    Profile(ProfileArgs),
    /// Train a random forest from a feature table and a label file.
    Train(TrainArgs),
    /// Score a feature table with one or more trained models.
    Predict(PredictArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    /// `.csv` files as CSV, anything else as whitespace-separated.
    Auto,
    Whitespace,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Event file (`sender receiver timestamp` per line, or CSV); `.gz` is decompressed.
    pub file: PathBuf,
    #[arg(long = "input-format", value_enum, default_value = "auto")]
    pub input_format: InputKind,
    /// Fail on the first malformed line instead of skipping it.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Print the parse report instead of the events.
    #[arg(long)]
    pub report: bool,
    /// Report as JSON.
    #[arg(long, requires = "report")]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Minimum messages exchanged.
    #[arg(long, default_value_t = 1)]
    pub min: usize,
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct KdeArgs {
    /// Kernel mean, in bandwidth units.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mu: f64,
    /// Kernel standard deviation, in bandwidth units.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Bandwidth in seconds [default: viewed range times the zoom level's fraction].
    #[arg(long)]
    pub h: Option<f64>,
    /// Density samples per pair.
    #[arg(long, default_value_t = commdyn_core::density::DEFAULT_GRID_SAMPLES)]
    pub grid_n: usize,
    /// Start of the viewed window [default: kernel support of the first event].
    #[arg(long, allow_negative_numbers = true)]
    pub from: Option<f64>,
    /// End of the viewed window [default: kernel support of the last event].
    #[arg(long, allow_negative_numbers = true)]
    pub to: Option<f64>,
    /// Semantic zoom level used when --h is not given: coarse, medium or fine.
    #[arg(long, default_value = "medium")]
    pub zoom_level: String,
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    /// Density threshold.
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    /// `relative` scales epsilon by the pair's peak total density.
    #[arg(long, default_value = "relative")]
    pub epsilon_mode: EpsilonMode,
    /// Drop episodes shorter than this, in seconds.
    #[arg(long, default_value_t = 0.0)]
    pub min_duration: f64,
    /// Merge episodes separated by less than this, in seconds.
    #[arg(long, default_value_t = 0.0)]
    pub merge_gap: f64,
}

#[derive(Debug, Args)]
pub struct EpisodesArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Pair as `a,b` (outgoing means a to b); repeatable.
    #[arg(
        long = "pair",
        value_name = "A,B",
        required_unless_present = "all_pairs"
    )]
    pub pairs: Vec<Pair>,
    /// Every pair with at least --min messages.
    #[arg(long, conflicts_with = "pairs")]
    pub all_pairs: bool,
    #[arg(long, default_value_t = 1, requires = "all_pairs")]
    pub min: usize,
    #[command(flatten)]
    pub kde: KdeArgs,
    #[command(flatten)]
    pub detect: DetectArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_name = "A,B")]
    pub pair: Pair,
    #[command(flatten)]
    pub kde: KdeArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Feature table as written by `episodes`; repeatable.
    #[arg(long, required = true)]
    pub features: Vec<PathBuf>,
    /// CSV with `episode_ref,label` (positive/negative).
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Name stored in the model.
    #[arg(long, default_value = "relevant")]
    pub class: String,
    #[arg(long, default_value_t = 100)]
    pub n_trees: usize,
    #[arg(long, default_value_t = 8)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 1)]
    pub min_leaf: usize,
    #[arg(long, default_value_t = 4)]
    pub features_per_split: usize,
    /// Grow every tree on the full training set.
    #[arg(long)]
    pub no_bootstrap: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Ranking {
    /// Input order.
    Input,
    /// Confidence closest to 0.5 first.
    Uncertain,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file; repeat to combine several.
    #[arg(long = "model", required = true)]
    pub models: Vec<PathBuf>,
    /// How several models are combined: and (min confidence) or or (max).
    #[arg(long, default_value = "and")]
    pub combine: CombineMode,
    #[arg(long, required = true)]
    pub features: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub min_confidence: f64,
    /// Which predicted label to keep.
    #[arg(long, default_value = "positive")]
    pub polarity: Label,
    #[arg(long, value_enum, default_value = "input")]
    pub rank: Ranking,
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "COMMDYN_CORPUS")]
    pub corpus: PathBuf,
    #[arg(long, env = "COMMDYN_HOST", default_value = commdyn_server::DEFAULT_HOST)]
    pub host: String,
    #[arg(long, env = "COMMDYN_PORT", default_value_t = commdyn_server::DEFAULT_PORT)]
    pub port: u16,
    /// Directory for session documents [default: in memory only].
    #[arg(long, env = "COMMDYN_SESSION_DIR")]
    pub session_dir: Option<PathBuf>,
    /// Built UI bundle to serve at `/`.
    #[arg(long, env = "COMMDYN_UI_DIR")]
    pub ui_dir: Option<PathBuf>,
    /// Allowed CORS origin [default: any].
    #[arg(long, env = "COMMDYN_CORS_ORIGIN")]
    pub cors_origin: Option<String>,
    #[arg(long = "input-format", value_enum, default_value = "auto")]
    pub input_format: InputKind,
}
