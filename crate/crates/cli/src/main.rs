//! `nirpulse` command-line interface.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

/// NIR remote photoplethysmography pipeline.
///
/// Every subcommand is deterministic given --seed. Data goes to files or
/// standard output, progress to standard error. Exit codes: 0 ok, 2 usage
/// error, 3 data or format error, 4 invariant violation.
#[derive(Debug, Parser)]
#[command(name = "nirpulse", version)]
pub struct Cli {
    /// Seed for every random choice
    #[arg(long, global = true, env = "NIRPULSE_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Worker threads
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: u64,

    /// `key = value` file of flag defaults; command-line flags win
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset and its manifest
    Synth(SynthArgs),
    /// Fill dropped samples and resample ground truth to 30 Hz
    Correct(ManifestArgs),
    /// Peak-trough normalize ground truth to [0, 1]
    Normalize(ManifestArgs),
    /// Add ten heart-rate augmented copies of every original train video
    Augment(AugmentArgs),
    /// Crop videos to their face box and resize
    Crop(CropArgs),
    /// Train the attention network on the train split
    Train(TrainArgs),
    /// Predict waveforms for a split with overlap-averaged windows
    Infer(InferArgs),
    /// Heart-rate MAE report and plot data
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory; receives manifest.csv and the data files
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub subjects: usize,
    /// Lowest heart rate, bpm
    #[arg(long, default_value_t = 45.0)]
    pub hr_min: f64,
    /// Highest heart rate, bpm
    #[arg(long, default_value_t = 135.0)]
    pub hr_max: f64,
    /// Seconds per video
    #[arg(long, default_value_t = 30.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
    /// Frame height and width in pixels
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    /// Per-pixel noise standard deviation
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.1)]
    pub dicrotic_min: f64,
    #[arg(long, default_value_t = 0.3)]
    pub dicrotic_max: f64,
    /// Zero-based subject indices held out for testing
    #[arg(long, value_delimiter = ',', default_value = "2,5")]
    pub test_subjects: Vec<usize>,
    /// Window length the videos must be able to hold
    #[arg(long, default_value_t = 64)]
    pub window: usize,
}

#[derive(Debug, Args)]
pub struct ManifestArgs {
    /// Dataset manifest, rewritten in place
    #[arg(long)]
    pub manifest: PathBuf,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// Dataset manifest, rewritten in place
    #[arg(long)]
    pub manifest: PathBuf,
    /// Window length every trimmed copy must hold
    #[arg(long, default_value_t = 64)]
    pub window: usize,
}

#[derive(Debug, Args)]
pub struct CropArgs {
    /// Dataset manifest, rewritten in place
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output height and width in pixels
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    /// Box padding as a fraction of the box size on each side
    #[arg(long, default_value_t = 0.25)]
    pub pad: f64,
    /// Resize whole frames without cropping
    #[arg(long)]
    pub no_crop: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Weight file to write
    #[arg(long)]
    pub out: PathBuf,
    /// Loss trace CSV [default: <out>.loss.csv]
    #[arg(long)]
    pub loss_trace: Option<PathBuf>,
    /// Window length N
    #[arg(long, default_value_t = 64)]
    pub window: usize,
    /// Spacing of training window starts
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long, default_value_t = 8)]
    pub c1: usize,
    #[arg(long, default_value_t = 16)]
    pub c2: usize,
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    #[arg(long, default_value_t = 1.0)]
    pub snake_a: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 8)]
    pub batch_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SplitChoice {
    Train,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Weight file
    #[arg(long)]
    pub model: PathBuf,
    /// Directory for prediction CSVs and metadata sidecars
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Spacing of window starts
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Original recordings of this split are predicted
    #[arg(long, value_enum, default_value_t = SplitChoice::Test)]
    pub split: SplitChoice,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Prediction directory, optionally labelled as LABEL=DIR; repeat to
    /// compare several runs
    #[arg(long, required = true)]
    pub pred: Vec<String>,
    /// Directory for report.txt, report CSVs and plot data
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            kind: "usage".into(),
            message: message.into(),
        }
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        Self {
            code: 4,
            kind: "invalid_input".into(),
            message: message.into(),
        }
    }
}

impl From<nirpulse::Error> for CliError {
    fn from(e: nirpulse::Error) -> Self {
        Self {
            code: if e.is_data_error() { 3 } else { 4 },
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

fn parse(raw: Vec<OsString>) -> Result<Cli, CliError> {
    let root = Cli::command();
    let matches = match root.clone().try_get_matches_from(&raw) {
        Ok(m) => m,
        Err(e) => e.exit(),
    };
    let matches = match matches.get_one::<PathBuf>("config") {
        Some(path) => {
            let entries = config::read_entries(path)?;
            let mut merged = raw;
            merged.extend(config::merge_args(&root, &matches, &entries)?);
            match root.try_get_matches_from(&merged) {
                Ok(m) => m,
                Err(e) => e.exit(),
            }
        }
        None => matches,
    };
    Cli::from_arg_matches(&matches).map_err(|e| CliError::usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads as usize)
        .build_global()
        .map_err(|e| CliError::invariant(e.to_string()))?;
    let seed = cli.seed;
    match cli.command {
        Command::Synth(a) => commands::synth(&a, seed),
        Command::Correct(a) => commands::correct(&a),
        Command::Normalize(a) => commands::normalize(&a),
        Command::Augment(a) => commands::augment(&a, seed),
        Command::Crop(a) => commands::crop(&a),
        Command::Train(a) => commands::train(&a, seed),
        Command::Infer(a) => commands::infer(&a),
        Command::Eval(a) => commands::eval(&a),
    }
}

fn main() -> ExitCode {
    let result = parse(std::env::args_os().collect()).and_then(run);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.message.replace(['\n', '\r'], " ");
            eprintln!("error: code={} kind={} message={message:?}", e.code, e.kind);
            ExitCode::from(e.code)
        }
    }
}
