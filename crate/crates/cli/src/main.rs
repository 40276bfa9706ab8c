//! `depthcurr` command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 verification
//! failure.

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use depthcurr::TargetSize;

#[derive(Debug, Parser)]
#[command(name = "depthcurr", version, about = "Curriculum training over dilated sparse depth ground truth")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Enumerate the syllabus catalog for a target size.
    Catalog(CatalogArgs),
    /// Write a synthetic dataset with dense oracle depth.
    Synth(SynthArgs),
    /// Mean and spread of ground-truth density for every catalog syllabus.
    Density(DensityArgs),
    /// Train the reference model with a curriculum.
    Train(TrainArgs),
    /// Write depth predictions of a trained model as 16-bit PNGs.
    Predict(PredictArgs),
    /// Evaluate predictions (or a checkpoint) against a dataset.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    /// Target size as HxW.
    #[arg(long, default_value = "256x512")]
    pub target: TargetSize,
    /// Write the built-in 256x512 table instead of enumerating.
    #[arg(long, conflicts_with = "target")]
    pub canonical: bool,
    /// Fail (exit 4) if the enumerated 256x512 sizes differ from the table.
    #[arg(long)]
    pub verify: bool,
    /// Output JSON file; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub count: usize,
    #[arg(long, default_value = "64x128")]
    pub size: TargetSize,
    /// Fraction of pixels kept in the sparse ground truth.
    #[arg(long, default_value_t = 0.25)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Target size; ignored when --catalog is given.
    #[arg(long, default_value = "256x512")]
    pub target: TargetSize,
    /// Catalog JSON to use instead of enumerating for --target.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// CSV output; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional SVG bar chart.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Consecutive,
    Cumulative,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LossArg {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ImputationArg {
    Max,
    Mean,
    Gaussian,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory (see `synth`).
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for the checkpoint, event log and summary.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "256x512")]
    pub target: TargetSize,
    /// A, B, C, full, none, or comma-separated catalog indices.
    #[arg(long, conflicts_with = "plan")]
    pub curriculum: Option<String>,
    /// Plan JSON: {lambda, mode, syllabuses, patience}.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Minimum-decrease parameter (default 0.999).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// One patience value for every syllabus, or a comma-separated list.
    #[arg(long)]
    pub patience: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub steps: u64,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub lr_decay: f64,
    /// Steps between learning-rate decays; scaled from --steps when absent.
    #[arg(long)]
    pub decay_interval: Option<u64>,
    #[arg(long, value_enum, default_value = "l1")]
    pub loss: LossArg,
    #[arg(long, value_enum, default_value = "max")]
    pub imputation: ImputationArg,
    /// Disable the random horizontal flip.
    #[arg(long)]
    pub no_augment: bool,
    /// Keep training on the last syllabus until --steps are spent.
    #[arg(long)]
    pub train_to_budget: bool,
    /// Also advance the syllabus at the end of every pass over the data.
    #[arg(long)]
    pub advance_on_epoch_end: bool,
    /// Require --lambda and --patience (or a plan file) to be given.
    #[arg(long)]
    pub strict: bool,
    /// Hidden widths of the reference model as C1,C2.
    #[arg(long, default_value = "8,16")]
    pub widths: String,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Model input size; predictions are resized to each sample's size.
    #[arg(long, default_value = "256x512")]
    pub target: TargetSize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Directory of predicted depth PNGs named `<id>.png`.
    #[arg(long, required_unless_present = "model", conflicts_with = "model")]
    pub pred: Option<PathBuf>,
    /// Checkpoint to run on the dataset images.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Model input size when evaluating a checkpoint.
    #[arg(long, default_value = "256x512")]
    pub target: TargetSize,
    /// Compare against the dense oracle maps instead of the sparse ground truth.
    #[arg(long)]
    pub dense: bool,
    /// Restrict evaluation to the Garg crop.
    #[arg(long)]
    pub garg_crop: bool,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
    /// Output file; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Catalog(a) => commands::catalog(a),
        Command::Synth(a) => commands::synth(a),
        Command::Density(a) => commands::density(a),
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Eval(a) => commands::eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            for line in e.messages() {
                eprintln!("error: {line}");
            }
            ExitCode::from(e.code())
        }
    }
}
