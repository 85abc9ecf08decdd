use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Collaborative representation distance: fit, score, evaluate and benchmark
/// patch-feature anomaly scoring.
#[derive(Debug, Parser)]
#[command(name = "crd", version)]
pub struct RunConfig {
    /// Worker threads for scoring and scans.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a CRD1 model from a bank of normal patch features.
    Fit(FitArgs),
    /// Score the images of a manifest with a stored model.
    Score(ScoreArgs),
    /// Compute AUROC for CRD and, optionally, nearest-neighbor baselines.
    Eval(EvalArgs),
    /// Time CRD scoring against an exact nearest-neighbor scan.
    Bench(BenchArgs),
    /// Write a synthetic dataset (bank, per-image features, masks, manifests).
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// FTB1 tensor of training patches.
    #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
    pub bank: Option<PathBuf>,
    /// Manifest of training images; their patches are concatenated.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output CRD1 model.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = crd_core::DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Subsample the bank with a greedy k-center coreset before fitting.
    #[arg(long)]
    pub coreset_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HeatmapFormat {
    Ftb,
    Pgm,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    /// Directory for per-image heatmaps.
    #[arg(long)]
    pub heatmaps: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = HeatmapFormat::Ftb)]
    pub heatmap_format: HeatmapFormat,
    /// Heatmap size as ROWSxCOLS; defaults to the mask size, else 8x the patch grid.
    #[arg(long, value_parser = parse_size)]
    pub heatmap_size: Option<(usize, usize)>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Fixed decision threshold (anomalous iff score > threshold).
    #[arg(long, conflicts_with = "calibration")]
    pub threshold: Option<f64>,
    /// Manifest of normal images used to calibrate the threshold; defaults to
    /// the label-0 images of the scored manifest.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output CSV: image_id,image_score,label,prediction.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
    #[command(flatten)]
    pub heatmap: HeatmapArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// FTB1 tensor of training patches.
    #[arg(long, required_unless_present = "model")]
    pub bank: Option<PathBuf>,
    /// Stored model; CRD only, no baselines or sweep.
    #[arg(long, conflicts_with = "bank")]
    pub model: Option<PathBuf>,
    /// Test manifest with labels (and optional masks).
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = crd_core::DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Neighbors averaged by the NN baseline.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Also evaluate the exact NN / k-NN baseline.
    #[arg(long)]
    pub baselines: bool,
    /// Also evaluate NN on a greedy coreset of this fraction of the bank.
    #[arg(long)]
    pub coreset_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report AUROC for every lambda in {0.1, 1, 3, 5, 10}.
    #[arg(long)]
    pub sweep_lambda: bool,
    /// Per-image CRD scores as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Bank to benchmark against; synthetic when absent.
    #[arg(long, requires = "manifest")]
    pub bank: Option<PathBuf>,
    /// Query images for --bank.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 128)]
    pub d: usize,
    /// Synthetic bank sizes, comma separated; one report per size.
    #[arg(long, value_delimiter = ',', default_value = "10000")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub m: usize,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = crd_core::DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Append JSON-lines reports to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub d: usize,
    #[arg(long, default_value_t = 2)]
    pub grid_h: usize,
    #[arg(long, default_value_t = 2)]
    pub grid_w: usize,
    /// Training images (all normal).
    #[arg(long, default_value_t = 40)]
    pub n_train: usize,
    #[arg(long, default_value_t = 100)]
    pub n_test_normal: usize,
    #[arg(long, default_value_t = 100)]
    pub n_test_anom: usize,
    /// Defect displacement, in units of the patch noise level.
    #[arg(long, default_value_t = 6.0)]
    pub shift_sigma: f64,
    /// Largest defect side, in patches.
    #[arg(long, default_value_t = 2)]
    pub max_defect: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxCOLS, got {s:?}"))?;
    let h = h.trim().parse().map_err(|e| format!("rows: {e}"))?;
    let w = w.trim().parse().map_err(|e| format!("cols: {e}"))?;
    Ok((h, w))
}
