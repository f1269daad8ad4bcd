use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::covariance::ClipPolicy;
use crate::error::Result;
use crate::finlab::Z_CRIT_5;
use crate::quantile::MiddleMatrix;
use crate::simlab::ScaleMode;

#[derive(Debug, Parser)]
#[command(
    name = "normreg",
    version,
    about = "Norm-weighted predictive regression: fits, pivot simulations, CvM grids and rolling-beta backtests",
    long_about = None
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Fit both estimators (and optionally a quantile regression) to a y,z CSV; writes fit.json.
    Fit(FitArgs),
    /// Monte Carlo study of the slope pivots; writes pivots.csv, qq.csv and simulate.json.
    Simulate(SimulateArgs),
    /// Cramér-von Mises distances over a (nu, n) grid; writes cvm_grid.csv.
    Cvm(CvmArgs),
    /// Rolling single-index regressions on a price CSV; writes rolling.csv and summaries.
    Roll(RollArgs),
    /// Rolling fits plus the high/low beta portfolio backtest; writes backtest.json.
    Backtest(BacktestArgs),
    /// Re-run the command recorded in a manifest.json.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct OutputArgs {
    /// Output directory, created if absent. Nothing is written outside it.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads for the parallel loops; 0 uses every core. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ClipArgs {
    /// Clipping constant d: meat rows with max |x|/c >= d*n^exponent are dropped. `inf` disables clipping.
    #[arg(long, default_value_t = 10.0)]
    #[serde(with = "crate::serde_f64")]
    pub d: f64,
    /// Growth exponent of the clipping threshold d*n^exponent.
    #[arg(long, default_value_t = 0.2)]
    pub exponent: f64,
}

impl ClipArgs {
    pub fn policy(&self) -> Result<ClipPolicy> {
        ClipPolicy::new(self.d, self.exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MiddleArg {
    /// S_GG, the variance of the score.
    Gg,
    /// S_GX, the alternative written in some presentations.
    Gx,
}

impl From<MiddleArg> for MiddleMatrix {
    fn from(m: MiddleArg) -> Self {
        match m {
            MiddleArg::Gg => MiddleMatrix::Gg,
            MiddleArg::Gx => MiddleMatrix::Gx,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FitArgs {
    /// CSV with a header: a `y` column for the outcome, every other column a predictor.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub clip: ClipArgs,
    /// Also fit the norm-weighted quantile regression at this level (0 < tau < 1).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Kernel bandwidth for the quantile covariance; default is MAD/0.6745 * n^(-1/5) with a floor.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Middle matrix of the quantile sandwich.
    #[arg(long, value_enum, default_value_t = MiddleArg::Gg)]
    pub middle_matrix: MiddleArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleArg {
    /// Var(x) = sigma_x^2; needs nu > 2.
    Variance,
    /// E|x - psi| = sigma_x; needs nu > 1.
    AbsMean,
}

impl From<ScaleArg> for ScaleMode {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Variance => ScaleMode::VarianceScaled,
            ScaleArg::AbsMean => ScaleMode::AbsMeanScaled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DesignArgs {
    /// Spread of the Student-t predictor.
    #[arg(long, default_value_t = 3.24)]
    pub sigma_x: f64,
    /// Location of the predictor.
    #[arg(long, default_value_t = 0.21)]
    pub psi: f64,
    /// True intercept.
    #[arg(long, default_value_t = 0.0)]
    pub beta0: f64,
    /// True slope; the pivots are centered on it.
    #[arg(long, default_value_t = 1.0)]
    pub beta1: f64,
    /// Standard deviation of the Gaussian noise.
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    /// How t draws are scaled into predictors.
    #[arg(long, value_enum, default_value_t = ScaleArg::Variance)]
    pub scale_mode: ScaleArg,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Observations per replication.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Degrees of freedom of the t predictor.
    #[arg(long, default_value_t = 2.4)]
    pub nu: f64,
    #[command(flatten)]
    pub design: DesignArgs,
    /// Replications; 50,000 keeps desk-scale runtimes.
    #[arg(long, default_value_t = 50_000)]
    pub reps: usize,
    /// Use 500,000 replications regardless of --reps.
    #[arg(long)]
    pub full_scale: bool,
    /// Root seed; replication r uses stream r of this seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of QQ points written to qq.csv.
    #[arg(long, default_value_t = 200)]
    pub qq_grid: usize,
    #[command(flatten)]
    pub clip: ClipArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CvmArgs {
    /// Comma-separated degrees of freedom.
    #[arg(long, value_delimiter = ',', default_value = "2.4,4.4,8")]
    pub nu: Vec<f64>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',', default_value = "100,250")]
    pub n: Vec<usize>,
    #[command(flatten)]
    pub design: DesignArgs,
    /// Replications per grid cell.
    #[arg(long, default_value_t = 50_000)]
    pub reps: usize,
    /// Use 500,000 replications per cell regardless of --reps.
    #[arg(long)]
    pub full_scale: bool,
    /// Monte Carlo trials for the null quantiles of the statistic at sample size --reps.
    #[arg(long, default_value_t = 10_000)]
    pub null_trials: usize,
    /// Root seed; each cell and the null run get seeds derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub clip: ClipArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RollArgs {
    /// Long-format price CSV with header date,ticker,adj_close.
    #[arg(long)]
    pub input: PathBuf,
    /// Ticker of the market index; it must have a price on every date.
    #[arg(long, default_value = "SPY")]
    pub index: String,
    /// Weekly returns per regression (at least 30).
    #[arg(long, default_value_t = 100)]
    pub window: usize,
    /// High-beta test rejects H0: beta <= high.
    #[arg(long, default_value_t = 1.4)]
    pub high: f64,
    /// Low-beta test rejects H0: beta >= low.
    #[arg(long, default_value_t = 0.8)]
    pub low: f64,
    /// One-sided critical value; the exact 5% point is 1.6449, pass 1.64 to match rounded charts.
    #[arg(long, default_value_t = Z_CRIT_5)]
    pub crit: f64,
    /// Let a return span weeks without prices instead of marking it missing.
    #[arg(long)]
    pub allow_gaps: bool,
    #[command(flatten)]
    pub clip: ClipArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub roll: RollArgs,
    /// Regress portfolio returns on the index by least squares instead of the norm-weighted estimator.
    #[arg(long)]
    pub ls_summary: bool,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct ReplayArgs {
    /// A manifest.json written by an earlier run.
    pub manifest: PathBuf,
    /// Write to this directory instead of the one recorded in the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
