use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

const FORMULAS: &str = "\
Formula-to-flag map:
  q_k (face weight of degree k)     --weights '{\"k\": \"p/q\"}' or --config FILE
  2p-angulation, q_2p               --preset two-p-angulation --p P
  (2p+1)-angulation                 --preset odd-angulation --p P
  geometric q_k = A beta^k          --preset geometric --H H
  symmetric critical family         --preset symmetric --r R --a A
  deformation q_k -> g^(k/2-1) q_k  analyze --g G
  negative truncation of nu         --kneg K
  D_max (inner degree budget)       enumerate --dmax D
  root face degree l                enumerate --l L, simulate --l L
  n (peeling steps)                 simulate --steps N, scaling-test --steps N
  tolerance on c_+, r residuals     --tol TOL";

/// Peeling processes of Boltzmann planar maps.
#[derive(Debug, Parser)]
#[command(name = "peelkit", version, after_help = FORMULAS)]
pub struct Cli {
    /// Worker threads (default: logical cores).
    #[arg(long, global = true, env = "PEELKIT_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for c_+ and r, classify, and report the step law.
    Analyze(AnalyzeArgs),
    /// Closed-form constants of a preset family next to the solver's values.
    Preset(PresetArgs),
    /// Sample a perimeter/volume trace.
    Simulate(SimulateArgs),
    /// Exact disk-function table from the loop equations.
    Enumerate(EnumerateArgs),
    /// Monte Carlo scaling diagnostics.
    ScalingTest(ScalingArgs),
    /// Scale t such that t * q is critical.
    TuneCritical(TuneArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetName {
    Quadrangulation,
    Triangulation,
    TwoPAngulation,
    OddAngulation,
    Geometric,
    Symmetric,
}

#[derive(Debug, Clone, Args)]
pub struct WeightArgs {
    /// JSON map from face degree to weight, e.g. '{"4":"1/12"}'.
    #[arg(long, conflicts_with_all = ["preset", "config"])]
    pub weights: Option<String>,
    #[arg(long, value_enum, conflicts_with = "config")]
    pub preset: Option<PresetName>,
    /// JSON file holding a weight map.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long = "H")]
    pub h: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
    Bin,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub weights: WeightArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
    #[arg(long, default_value_t = 512)]
    pub kneg: i64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Fail with exit code 1 unless the sequence is critical.
    #[arg(long)]
    pub require_critical: bool,
    /// Also write the step law as CSV.
    #[arg(long)]
    pub law_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PresetArgs {
    #[command(flatten)]
    pub weights: WeightArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Finite,
    Ibpm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VolumeArg {
    ExactSmall,
    AsymptoticXi,
    Expectation,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub weights: WeightArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_enum, default_value = "ibpm")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    /// Initial perimeter.
    #[arg(long, default_value_t = 2)]
    pub l: i64,
    #[arg(long, default_value_t = peelkit::rng::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub chain: u64,
    #[arg(long, value_enum, default_value = "exact-small")]
    pub volume_mode: VolumeArg,
    #[arg(long, default_value_t = 512)]
    pub kneg: i64,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[command(flatten)]
    pub weights: WeightArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value_t = 2)]
    pub l: u32,
    #[arg(long, default_value_t = 40)]
    pub dmax: u32,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    /// Rescaling time n.
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 2_000)]
    pub chains: usize,
    /// Samples of the unconditioned walk.
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, default_value_t = peelkit::rng::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "exact-small")]
    pub volume_mode: VolumeArg,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub weights: WeightArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}
