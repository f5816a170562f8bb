use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use parnet::experiments::ExperimentName;

#[derive(Debug, Parser)]
#[command(name = "parnet", version, about = "Fit over-parametrized parallel-block networks and run the simulation protocols")]
pub struct Cli {
    /// Worker threads (default: all cores). Outputs do not depend on this.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a network to a CSV dataset (header x1..xd,y).
    Fit(FitArgs),
    /// Evaluate a saved model on a CSV of inputs.
    Predict(PredictArgs),
    /// Draw a dataset from the synthetic regression model.
    Generate(GenerateArgs),
    /// Run a named simulation protocol.
    Experiment(ExperimentArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

/// Constants of the data-dependent step schedule.
#[derive(Debug, Clone, Default, Args)]
pub struct ScheduleArgs {
    /// Smallest step budget tried by the adaptive schedule.
    #[arg(long)]
    pub tmin: Option<u64>,
    /// Exponent of the theoretical step cap (ln n)^c8 K^3; must exceed 2L.
    #[arg(long)]
    pub c8: Option<f64>,
    /// Tolerance constant of the stopping conditions.
    #[arg(long)]
    pub c9: Option<f64>,
    /// Upper bound on the step cap, or "none" for the theoretical value.
    #[arg(long, value_name = "STEPS|none")]
    pub practical_cap: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Training data.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "parnet-fit")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Number of parallel blocks K.
    #[arg(long, default_value_t = 800)]
    pub k: usize,
    /// Depth L of every block.
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    /// Width r of the hidden layers.
    #[arg(long, default_value_t = 8)]
    pub width: usize,
    /// Input-level weights start uniform on [-A, A].
    #[arg(long, default_value_t = 1000.0)]
    pub a_bound: f64,
    /// Hidden-level weights start uniform on [-B, B].
    #[arg(long, default_value_t = 20.0)]
    pub b_bound: f64,
    /// Truncation constant: predictions are clipped at c12 ln n.
    #[arg(long, default_value_t = parnet::DEFAULT_C12)]
    pub c12: f64,
    /// Choose stepsize and step count from the data (the default).
    #[arg(long, conflicts_with = "fixed_steps")]
    pub adaptive: bool,
    /// Run exactly N gradient steps instead.
    #[arg(long, value_name = "N")]
    pub fixed_steps: Option<u64>,
    /// Stepsize of a fixed run (default 1/N).
    #[arg(long, requires = "fixed_steps")]
    pub stepsize: Option<f64>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// Also write the per-step risk, gradient norm and distance (trace.csv).
    #[arg(long)]
    pub trace: bool,
    /// Record the L2 distance to the synthetic regression function (d = 1).
    #[arg(long)]
    pub synthetic_l2: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Inputs with header x1..xd (a trailing y column is carried along).
    #[arg(long)]
    pub input: PathBuf,
    /// Output CSV.
    #[arg(long, default_value = "predictions.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Replication index; matches the datasets used by `experiment`.
    #[arg(long, default_value_t = 0)]
    pub rep: u64,
    #[arg(long, default_value = "data.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// table1, table2, table3, table4, table5-nnfc or figure1.
    pub name: ExperimentName,
    /// Output directory (default results/<name>).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replications per cell.
    #[arg(long)]
    pub reps: Option<u64>,
    /// Sample size of every replication.
    #[arg(long)]
    pub n: Option<usize>,
    /// Values of K, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub a_bound: Option<f64>,
    #[arg(long)]
    pub b_bound: Option<f64>,
    /// Step count of the fixed-schedule protocols (default K/2).
    #[arg(long, value_name = "N")]
    pub fixed_steps: Option<u64>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[arg(long)]
    pub c12: Option<f64>,
    /// Hidden-layer counts of the baseline protocols, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub layers: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
    /// Output directory (default: the manifest's directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}
