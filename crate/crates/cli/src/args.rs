use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "heavytail", version, about = "Top eigenvalues of heavy-tailed sample covariance matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate p independent paths and write paths.csv.
    Simulate(SimulateArgs),
    /// Simulate matrices and write the top-k eigenvalues to eigen.csv.
    Eigen(ExperimentArgs),
    /// Run a verification experiment; writes report.json and ecdf.csv.
    Verify(ExperimentArgs),
    /// Solve E[(a1 Z^2 + b1)^alpha] = 1 for the GARCH(1,1) tail index.
    GarchAlpha(GarchAlphaArgs),
    /// Estimate the large-deviation constant b by simulation.
    BEstimate(BEstimateArgs),
    /// Hill estimate of the tail index of a data file.
    Hill(HillArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProcessChoice {
    Iid,
    Sv,
    Garch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VolChoice {
    ExpGaussian,
    MDependent,
}

#[derive(Debug, Clone, Args)]
pub struct ProcessArgs {
    #[arg(long, value_enum)]
    pub process: Option<ProcessChoice>,
    /// Tail index of the Pareto noise (iid, sv); tail-index override for garch.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Probability of a positive tail.
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, value_enum, default_value_t = VolChoice::ExpGaussian)]
    pub vol: VolChoice,
    /// Coefficients of the log-volatility filter.
    #[arg(long, value_delimiter = ',', default_value = "0.6,0.8")]
    pub psi: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub xi_std: f64,
    /// Window length minus one of the m-dependent volatility.
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long, default_value_t = 1.0)]
    pub a0: f64,
    #[arg(long)]
    pub a1: Option<f64>,
    #[arg(long)]
    pub b1: Option<f64>,
    /// Full ARCH coefficient list (overrides --a1).
    #[arg(long, value_delimiter = ',')]
    pub a: Option<Vec<f64>>,
    /// Full GARCH coefficient list (overrides --b1).
    #[arg(long, value_delimiter = ',')]
    pub b: Option<Vec<f64>>,
    #[arg(long)]
    pub burn_in: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Re-run from the config echoed in a previous manifest.json.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    /// TOML config with ExperimentConfig keys; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub process: ProcessArgs,
    #[arg(long)]
    pub n: Option<usize>,
    /// p = round(n^beta).
    #[arg(long, conflicts_with_all = ["kappa", "p"])]
    pub beta: Option<f64>,
    /// p = round(n^kappa), kappa >= 1.
    #[arg(long, conflicts_with = "p")]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub x_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub ks_tol: Option<f64>,
    #[arg(long)]
    pub spacing_tol: Option<f64>,
    #[arg(long)]
    pub ratio_band: Option<f64>,
    #[arg(long)]
    pub b_reps: Option<usize>,
    #[arg(long)]
    pub calibration_draws: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GarchAlphaArgs {
    #[arg(long)]
    pub a1: f64,
    #[arg(long)]
    pub b1: f64,
    #[arg(long, default_value_t = 256)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 50.0)]
    pub alpha_max: f64,
}

#[derive(Debug, Clone, Args)]
pub struct BEstimateArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    /// Number of simulated rows.
    #[arg(long)]
    pub reps: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,4")]
    pub x_grid: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub min_exceedances: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub calibration_draws: usize,
}

#[derive(Debug, Clone, Args)]
pub struct HillArgs {
    /// One value per line, or a CSV with a header (e.g. paths.csv).
    #[arg(long)]
    pub input: PathBuf,
    /// Column to read when the file has a header.
    #[arg(long, default_value = "value")]
    pub column: String,
    /// Upper order statistics used; defaults to floor(n^0.6).
    #[arg(long)]
    pub k: Option<usize>,
}
