use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pqrst::neural::ModelConfig;
use pqrst::{Method, WaveClass};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "pqrst", version, about = "Synthetic ECG generation, preprocessing and P/QRS/T segmentation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic records with span annotations
    Synth(SynthArgs),
    /// Apply one transform to a signal CSV
    Preprocess(PreprocessArgs),
    /// Magnitude spectrum and per-wave dominant frequencies
    Fft(FftArgs),
    /// Train a segmenter for one wave
    Train(TrainArgs),
    /// Score a checkpoint on labelled records
    Eval(EvalArgs),
    /// Train and score every (method, wave, seed) combination
    Compare(CompareArgs),
    /// Plot-ready CSVs of the default beat, its transforms and spectra
    PlotData(PlotDataArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Preprocess(_) => "preprocess",
            Command::Fft(_) => "fft",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Compare(_) => "compare",
            Command::PlotData(_) => "plot-data",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Seed for every random draw
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory
    #[arg(long, env = "PQRST_OUT_DIR", default_value = "out")]
    pub out: PathBuf,
}

pub fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|_| format!("expected one of raw, hilbert, euler, gauss-legendre; got `{s}`"))
}

pub fn parse_wave(s: &str) -> Result<WaveClass, String> {
    match s {
        "P" => Ok(WaveClass::P),
        "QRS" => Ok(WaveClass::Qrs),
        "T" => Ok(WaveClass::T),
        _ => Err(format!("expected one of P, QRS, T; got `{s}`")),
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    /// 64/128/256 filters, 128 hidden units per direction
    Full,
    /// 2/3/4 filters, 4 hidden units (smoke tests)
    Tiny,
}

impl Arch {
    pub fn config(self) -> ModelConfig {
        match self {
            Arch::Full => ModelConfig::full(),
            Arch::Tiny => ModelConfig::tiny(),
        }
    }
}

/// Synthetic corpus used when no record directory is given.
#[derive(Debug, Clone, Args, Serialize)]
pub struct CorpusArgs {
    /// Number of records
    #[arg(long, default_value_t = 20)]
    pub records: usize,
    /// Beats per record
    #[arg(long, default_value_t = 10)]
    pub beats: usize,
    /// Additive noise standard deviation (mV)
    #[arg(long, default_value_t = 0.05)]
    pub noise_std: f64,
    /// Relative per-record jitter of amplitudes, widths and centres
    #[arg(long, default_value_t = 0.1)]
    pub jitter: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TransformArgs {
    /// Euler step (s); rounded to whole samples
    #[arg(long, default_value_t = 0.005)]
    pub dt: f64,
    /// Gauss–Legendre smoothing window (s)
    #[arg(long, default_value_t = 0.04)]
    pub window: f64,
    /// Gauss–Legendre nodes
    #[arg(long, default_value_t = 5)]
    pub gl_nodes: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConditioningArgs {
    /// Conditioning sample rate (Hz)
    #[arg(long, default_value_t = 250.0)]
    pub target_fs: f64,
    /// Band-pass lower edge (Hz)
    #[arg(long, default_value_t = 0.5)]
    pub band_lo: f64,
    /// Band-pass upper edge (Hz)
    #[arg(long, default_value_t = 50.0)]
    pub band_hi: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of records
    #[arg(long, default_value_t = 1)]
    pub records: usize,
    /// Beats per record
    #[arg(long, default_value_t = 1)]
    pub beats: usize,
    /// Sample rate (Hz)
    #[arg(long, default_value_t = 250.0)]
    pub fs: f64,
    /// Beat period (s)
    #[arg(long, default_value_t = 0.8)]
    pub beat_period: f64,
    /// Additive noise standard deviation (mV)
    #[arg(long, default_value_t = 0.0)]
    pub noise_std: f64,
    /// Relative per-record jitter; 0 repeats the default beat exactly
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PreprocessArgs {
    #[command(flatten)]
    pub common: Common,
    /// Signal CSV
    #[arg(long)]
    pub input: PathBuf,
    /// Transform
    #[arg(long, default_value = "raw", value_parser = parse_method)]
    pub method: Method,
    #[command(flatten)]
    pub transform: TransformArgs,
    /// Resample, band-pass and z-normalize before the transform
    #[arg(long)]
    pub condition: bool,
    #[command(flatten)]
    pub conditioning: ConditioningArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FftArgs {
    #[command(flatten)]
    pub common: Common,
    /// Signal CSV
    #[arg(long)]
    pub input: PathBuf,
    /// Annotation JSON; enables per-wave spectra
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Transform length
    #[arg(long, default_value_t = 512)]
    pub n_fft: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Network size
    #[arg(long, value_enum, default_value_t = Arch::Full)]
    pub arch: Arch,
    /// Preprocessing transform applied after conditioning
    #[arg(long, default_value = "raw", value_parser = parse_method)]
    pub method: Method,
    /// Target wave
    #[arg(long, default_value = "QRS", value_parser = parse_wave)]
    pub wave: WaveClass,
    #[command(flatten)]
    pub transform: TransformArgs,
    #[command(flatten)]
    pub conditioning: ConditioningArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OptimArgs {
    /// Adam learning rate
    #[arg(long, default_value_t = 3e-3)]
    pub lr: f64,
    /// Training epochs
    #[arg(long, default_value_t = 3)]
    pub epochs: usize,
    /// Sequences per batch
    #[arg(long, default_value_t = 4)]
    pub batch_size: usize,
    /// Training window length (samples)
    #[arg(long, default_value_t = 500)]
    pub train_window: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Directory of `<name>.csv` + `<name>.json` records; synthesized when absent
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Checkpoint written by `train`
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Directory of records; synthesized when absent
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Timed repetitions after one warm-up
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    /// Directory of records; synthesized when absent
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Transforms to compare
    #[arg(long, value_delimiter = ',', default_value = "raw,hilbert,euler,gauss-legendre", value_parser = parse_method)]
    pub methods: Vec<Method>,
    /// Target waves
    #[arg(long, value_delimiter = ',', default_value = "P,QRS,T", value_parser = parse_wave)]
    pub waves: Vec<WaveClass>,
    /// Number of training seeds, counted up from --seed
    #[arg(long, default_value_t = 3)]
    pub seeds: usize,
    /// Network size
    #[arg(long, value_enum, default_value_t = Arch::Full)]
    pub arch: Arch,
    #[command(flatten)]
    pub transform: TransformArgs,
    #[command(flatten)]
    pub conditioning: ConditioningArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
    /// Held-out fraction of records
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    /// Timed repetitions after one warm-up
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    /// Spectrum length
    #[arg(long, default_value_t = 512)]
    pub n_fft: usize,
    /// Concurrent training runs
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlotDataArgs {
    #[command(flatten)]
    pub common: Common,
    /// Beats rendered
    #[arg(long, default_value_t = 3)]
    pub beats: usize,
    /// Additive noise standard deviation (mV)
    #[arg(long, default_value_t = 0.0)]
    pub noise_std: f64,
    #[command(flatten)]
    pub transform: TransformArgs,
    /// Spectrum length
    #[arg(long, default_value_t = 512)]
    pub n_fft: usize,
}
