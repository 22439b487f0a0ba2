use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "hfpoint",
    version,
    about = "Graph-filter HF analysis, metrics and patch-fusion upsampling for point clouds"
)]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a mesh or cloud.
    #[command(subcommand)]
    Sample(SampleCommand),
    /// High-frequency point extraction and graph-filter denoising.
    #[command(subcommand)]
    Hf(HfCommand),
    /// Evaluate an upsampled cloud against ground truth.
    Metrics(MetricsArgs),
    /// Non-adversarial losses (reconstruction, uniform, identity).
    Loss(LossArgs),
    /// Patch-fusion upsampling with a builtin or plugin upsampler.
    Upsample(UpsampleArgs),
    /// Upsample and evaluate every pair of a dataset directory.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Xyz,
    Ply,
    PlyAscii,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output cloud path.
    #[arg(long = "out", value_name = "PATH")]
    pub out: PathBuf,
    /// Output format; by default inferred from the extension (.ply is binary PLY).
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Subcommand)]
pub enum SampleCommand {
    /// Poisson-disk sample of a mesh surface (sample elimination).
    Poisson(SampleArgs),
    /// Area-uniform random sample of a mesh, or a random subset of a cloud.
    MonteCarlo(SampleArgs),
    /// Farthest point sampling of a cloud.
    Fps(FpsArgs),
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Number of output points.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StartArg {
    First,
    Centroid,
    Random,
}

#[derive(Debug, Args)]
pub struct FpsArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long)]
    pub n: usize,
    /// First pick: index 0, farthest from the centroid, or random by seed.
    #[arg(long, value_enum, default_value = "centroid")]
    pub start: StartArg,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Default)]
pub struct GraphArgs {
    /// Neighborhood radius (on unit-sphere normalized coordinates).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Gaussian width; defaults to epsilon / 2.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Neighbors for nodes with nothing inside the radius.
    #[arg(long)]
    pub fallback_k: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum HfCommand {
    /// Write the top-M points by high-pass response, descending.
    Extract(HfExtractArgs),
    /// Remove or smooth high-frequency noise.
    Denoise(HfDenoiseArgs),
}

#[derive(Debug, Args)]
pub struct HfExtractArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Number of points to keep.
    #[arg(long)]
    pub m: Option<usize>,
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Skip unit-sphere normalization before building the graph.
    #[arg(long)]
    pub no_normalize: bool,
    /// Append the score as a fourth XYZ column.
    #[arg(long)]
    pub scores: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Trim,
    Smooth,
}

#[derive(Debug, Args, Default)]
pub struct DenoiseArgs {
    /// Denoising policy.
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,
    /// Trim threshold in standard deviations above the mean score.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Smoothing step.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Smoothing iterations.
    #[arg(long)]
    pub iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct HfDenoiseArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[command(flatten)]
    pub denoise: DenoiseArgs,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub no_normalize: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Default)]
pub struct MetricArgs {
    /// Squared ball radius for uniformity.
    #[arg(long)]
    pub r_q_sq: Option<f64>,
    /// Uniformity seed count (default ceil(0.05 |P|)).
    #[arg(long)]
    pub seeds: Option<usize>,
    /// HF points per cloud for hf_cd / hf_hd.
    #[arg(long)]
    pub hf_m: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Upsampled cloud.
    #[arg(long)]
    pub up: PathBuf,
    /// Ground-truth cloud.
    #[arg(long)]
    pub gt: PathBuf,
    /// Ground-truth mesh (needed for p2f).
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Comma-separated subset of cd,hd,p2f,uniformity,hf_cd,hf_hd. Default:
    /// all, minus p2f when no mesh is given.
    #[arg(long)]
    pub which: Option<String>,
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Upsampling ratio and input size; when both are given the expected
    /// ball population is r·N·r_q² instead of |P|·r_q².
    #[arg(long)]
    pub ratio: Option<usize>,
    #[arg(long)]
    pub input_size: Option<usize>,
    /// JSON report path; printed to stdout when neither --json nor --csv is given.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// One-row CSV path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Exact,
    Auction,
    Auto,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    #[arg(long)]
    pub up: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// Original low-resolution input.
    #[arg(long)]
    pub ori: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub solver: SolverArg,
    #[command(flatten)]
    pub metric: MetricArgs,
    /// Write the reconstruction assignment as source,target CSV.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("upsampler").args(["plugin", "builtin"]))]
pub struct UpsampleArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Upsampling ratio.
    #[arg(long)]
    pub r: Option<usize>,
    /// External upsampler command line (split on whitespace).
    #[arg(long, value_name = "CMD")]
    pub plugin: Option<String>,
    /// Builtin baseline: duplicate or midpoint.
    #[arg(long, value_name = "NAME")]
    pub builtin: Option<String>,
    /// Per-patch plugin timeout in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    #[arg(long)]
    pub no_denoise: bool,
    #[command(flatten)]
    pub denoise: DenoiseArgs,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub patch_size: Option<usize>,
    /// Expected number of patches covering each point.
    #[arg(long)]
    pub coverage: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (never changes the output).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Dataset root with input/, gt/ and optional mesh/ subdirectories.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Directory for per_pair.csv and aggregate.json (default: current).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub which: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Pairs processed concurrently.
    #[arg(long)]
    pub jobs: Option<usize>,
}
