use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::model::{FisherFlag, ModelSpec};

#[derive(Debug, Parser)]
#[command(name = "epfit", version, about = "Robust fitting of exponential power distributions")]
pub struct Cli {
    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true, env = "EPFIT_THREADS")]
    pub threads: Option<usize>,
    /// Record elapsed wall time in JSON reports. Reports with timing are not reproducible.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

// parsed once per process; boxing buys nothing
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one estimator to a data file.
    Fit(FitArgs),
    /// Pick tuning constants over a grid by Monte Carlo MAE.
    Tune(TuneArgs),
    /// Monte Carlo study of estimators under a contamination design.
    Simulate(SimulateArgs),
    /// Draw an exponential power sample.
    Rng(RngArgs),
    /// Fisher information of a score family at given parameters.
    Fisher(FisherArgs),
}

#[derive(Debug, Args)]
pub struct OutlierArgs {
    /// Append +2 max(x) and -2 max(x) to the data before fitting.
    #[arg(long)]
    pub add_outliers: bool,
    /// With --add-outliers, use max |x| instead of max x.
    #[arg(long, requires = "add_outliers")]
    pub outlier_abs: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// One value per line; an unparseable first line is treated as a header.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub model: ModelSpec,
    /// Fisher information route.
    #[arg(long, value_enum, default_value_t = FisherFlag::Auto)]
    pub fisher: FisherFlag,
    #[command(flatten)]
    pub outliers: OutlierArgs,
    /// JSON report path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Grid over beta: start:stop:step (inclusive) or a comma list.
    #[arg(long)]
    pub grid_beta: Option<String>,
    #[arg(long)]
    pub grid_q: Option<String>,
    /// Grid over the Huber cutoff.
    #[arg(long)]
    pub grid_r: Option<String>,
    #[arg(long)]
    pub grid_k: Option<String>,
    #[arg(long)]
    pub grid_t: Option<String>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Base estimator; grid flags override its tuning constants.
    #[command(flatten)]
    pub model: ModelSpec,
    #[command(flatten)]
    pub grid: GridArgs,
    /// TOML list of [[estimator]] candidates, instead of grid flags.
    #[arg(long, conflicts_with_all = ["grid_beta", "grid_q", "grid_r", "grid_k", "grid_t"])]
    pub candidates: Option<PathBuf>,
    /// Artificial samples per candidate.
    #[arg(long, default_value_t = 500)]
    pub replications: usize,
    /// Component sizes of artificial samples, n1,n2,n3 (default 7,n-9,2).
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub sizes: Option<Vec<usize>>,
    /// Fixed component shapes for artificial samples (default: the fitted alpha).
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub artificial_shapes: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = FisherFlag::Auto)]
    pub fisher: FisherFlag,
    #[command(flatten)]
    pub outliers: OutlierArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Design TOML: preset = 1..4 with n2, or three [[component]] tables.
    #[arg(long)]
    pub design: PathBuf,
    /// Estimator TOML with [[estimator]] tables (default: reference set of a preset).
    #[arg(long)]
    pub estimators: Option<PathBuf>,
    /// Replications.
    #[arg(long, default_value_t = 1000)]
    pub m: usize,
    #[arg(long)]
    pub seed: u64,
    /// CSV table path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional JSON report with the full table and design.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RngArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    /// One value per line (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FisherArgs {
    #[command(flatten)]
    pub model: ModelSpec,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Sample size multiplying the per-observation information.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = FisherFlag::Auto)]
    pub fisher: FisherFlag,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
