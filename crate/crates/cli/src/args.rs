use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Incremental generosity tuning: simulation, exact checks and payoff
/// analysis. Any flag can also come from `--config FILE` (a JSON object keyed
/// by flag name); command-line flags win.
#[derive(Debug, Parser)]
#[command(name = "kigt", version, args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Agent-level trajectory as CSV: t, z_1..z_k, avg_generosity.
    Simulate(SimulateArgs),
    /// Closed-form stationary law, optionally checked against an exact solve.
    Stationary(StationaryArgs),
    /// Coupling bound, coupling-time estimate and exact mixing time.
    Mixing(MixingArgs),
    /// Expected repeated-game payoff of one strategy against another.
    Payoff(PayoffArgs),
    /// Optimal generosity and its regime for a donation game.
    Optimality(OptimalityArgs),
    /// Mean-field against granular payoff over an (alpha, beta) sweep.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Write data here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest path; defaults to `<out>.manifest.json` when `--out` is set.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairingArg {
    Idealized,
    DistinctPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub g_hat: f64,
    #[arg(long, default_value_t = 0)]
    pub steps: u64,
    #[arg(long, default_value_t = 1)]
    pub record_every: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PairingArg::Idealized)]
    pub pairing: PairingArg,
    /// `uniform`, or comma-separated initial counts `z_1,..,z_k`.
    #[arg(long, default_value = "uniform")]
    pub init: String,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StationaryArgs {
    #[arg(long)]
    pub k: usize,
    /// Up-move weight; give with `--b` and `--m`.
    #[arg(long)]
    pub a: Option<f64>,
    /// Down-move weight.
    #[arg(long)]
    pub b: Option<f64>,
    /// Number of balls (GTFT nodes).
    #[arg(long)]
    pub m: Option<u32>,
    /// Population mode: AllD fraction; `a` and `b` follow from it.
    #[arg(long, conflicts_with_all = ["a", "b"])]
    pub beta: Option<f64>,
    /// AllC fraction in population mode.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Compare with the exact stationary solve.
    #[arg(long)]
    pub exact: bool,
    /// Largest state space the exact solve may enumerate.
    #[arg(long, default_value_t = kigt::ehrenfest::DEFAULT_STATE_CAP)]
    pub cap: usize,
    /// Include every state's probabilities in the exact comparison.
    #[arg(long)]
    pub states: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MixingArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
    #[arg(long, default_value_t = 16)]
    pub m: u32,
    #[arg(long, default_value_t = 0.25)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1000)]
    pub trials: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = kigt::ehrenfest::DEFAULT_STEP_LIMIT)]
    pub step_limit: u64,
    /// Largest state space for the exact distance scan.
    #[arg(long, default_value_t = 20_000)]
    pub exact_cap: usize,
    /// `m=8,16,32` or `k=2,4,8`: one row per value.
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GameArgs {
    /// Donation-game benefit.
    #[arg(long, default_value_t = 3.0)]
    pub b: f64,
    /// Donation-game cost.
    #[arg(long, default_value_t = 2.0)]
    pub c: f64,
    /// General reward vector `R,S,T,P`; overrides `--b`/`--c`.
    #[arg(long)]
    pub reward: Option<String>,
    #[arg(long, default_value_t = 0.9)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub s1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub g_hat: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PayoffArgs {
    /// `allc`, `alld` or `gtft:<g>`.
    #[arg(long)]
    pub me: String,
    #[arg(long)]
    pub opp: String,
    #[command(flatten)]
    pub game: GameArgs,
    /// Simulated games for the Monte Carlo column; 0 skips it.
    #[arg(long, default_value_t = 100_000)]
    pub games: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OptimalityArgs {
    #[command(flatten)]
    pub game: GameArgs,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub n: u32,
    /// Grid sizes for a generosity report (gap to the stationary mean).
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    /// Also check payoff monotonicity on a grid of this size.
    #[arg(long)]
    pub monotonicity_grid: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    #[command(flatten)]
    pub game: GameArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 6])]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub m: u32,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.1, 0.2, 0.3])]
    pub alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5])]
    pub betas: Vec<f64>,
    /// Monte Carlo draws per point for the sampling oracle; 0 skips it.
    #[arg(long, default_value_t = 0)]
    pub mc_draws: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}
