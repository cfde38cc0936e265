use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use metaweight::{AccuracySource, SizeMode};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "metaweight", version, about = "Dynamic accuracy/size weighted ensembles over trace bundles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic trace bundle from a world description.
    Simulate(SimulateArgs),
    /// Stratified train/val/test split of a labels file.
    Split(SplitArgs),
    /// Run the epoch-wise weighting and write the weight trajectory.
    Train(TrainArgs),
    /// Predict test labels with the weighted ensemble.
    Infer(EvalArgs),
    /// Evaluate the ensemble on the test split and write a report.
    Eval(EvalArgs),
    /// Compare the full ensemble with model pairs, single models and static weights.
    Ablate(AblateArgs),
    /// Measure latency and write accuracy/latency Pareto points.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Weights from the epoch-wise weighting.
    Dynamic,
    /// Uniform weights 1/n, no updates.
    Static,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SizeModeArg {
    Proportional,
    Inverse,
}

impl From<SizeModeArg> for SizeMode {
    fn from(v: SizeModeArg) -> Self {
        match v {
            SizeModeArg::Proportional => SizeMode::Proportional,
            SizeModeArg::Inverse => SizeMode::Inverse,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AccSourceArg {
    Train,
    Validation,
}

impl From<AccSourceArg> for AccuracySource {
    fn from(v: AccSourceArg) -> Self {
        match v {
            AccSourceArg::Train => AccuracySource::Train,
            AccSourceArg::Validation => AccuracySource::Validation,
        }
    }
}

/// Options shared by every command; flags override the config file.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON config file; any flag given on the command line overrides it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for all randomness in the command.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct WeightingArgs {
    /// Initial balancing parameter [default: 0.5].
    #[arg(long)]
    pub lambda_init: Option<f64>,
    /// Balancing-parameter update step [default: 0.1].
    #[arg(long)]
    pub delta: Option<f64>,
    /// Lower clip for the balancing parameter [default: 0.3].
    #[arg(long)]
    pub lambda_min: Option<f64>,
    /// Upper clip for the balancing parameter [default: 0.9].
    #[arg(long)]
    pub lambda_max: Option<f64>,
    /// Size share favors large (proportional) or small (inverse) models [default: proportional].
    #[arg(long, value_enum)]
    pub size_mode: Option<SizeModeArg>,
    /// Accuracy series driving the weighting [default: validation].
    #[arg(long, value_enum)]
    pub acc_source: Option<AccSourceArg>,
    /// Rescale final weights to sum to one.
    #[arg(long)]
    pub normalize_weights: bool,
    /// Comma-separated subset of bundle models to use.
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Output bundle directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write per-epoch validation prediction matrices.
    #[arg(long)]
    pub epoch_preds: bool,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Labels CSV with header `label`.
    #[arg(long)]
    pub labels: PathBuf,
    /// Output directory for train_idx.csv, val_idx.csv and test_idx.csv.
    #[arg(long)]
    pub out: PathBuf,
    /// Train,val,test fractions [default: 0.8,0.1,0.1].
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    /// Number of classes [default: largest label + 1].
    #[arg(long)]
    pub num_classes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub weighting: WeightingArgs,
    /// Trace bundle directory.
    #[arg(long)]
    pub bundle: PathBuf,
    /// Output weight-trajectory JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub weighting: WeightingArgs,
    /// Trace bundle directory.
    #[arg(long)]
    pub bundle: PathBuf,
    /// Weight-trajectory JSON written by `train`; computed in place when absent.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Ensemble weighting mode [default: dynamic].
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Output file (labels CSV for `infer`, report JSON for `eval`).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub weighting: WeightingArgs,
    /// Recorded bundle, resampled by bootstrap per seed. Without it the
    /// config's synthetic world is regenerated per seed.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    /// Number of seeds, starting at --seed [default: 10].
    #[arg(long)]
    pub num_seeds: Option<usize>,
    /// Output directory for ablation.csv and report.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub weighting: WeightingArgs,
    /// Trace bundle directory.
    #[arg(long)]
    pub bundle: PathBuf,
    /// Weight-trajectory JSON written by `train`; computed in place when absent.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Discarded warmup runs [default: 3].
    #[arg(long)]
    pub warmup: Option<usize>,
    /// Timed repetitions, at least 5 [default: 20].
    #[arg(long)]
    pub reps: Option<usize>,
    /// Output directory for latency.json and pareto.csv.
    #[arg(long)]
    pub out: PathBuf,
}
