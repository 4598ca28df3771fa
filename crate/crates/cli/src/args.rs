use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use muss_core::bench::{Method, QualityModel};
use muss_core::Criterion;

use crate::formats::Format;

#[derive(Debug, Parser)]
#[command(name = "muss", version, about = "Quality-plus-diversity subset selection")]
pub struct Cli {
    /// TOML file of default flag values, one table per subcommand
    /// (e.g. `[select]` with `k = 50`). Command-line flags win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Log per-stage progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic Gaussian-mixture dataset.
    Gen(GenArgs),
    /// Fit quality-augmented k-means and save the model.
    Cluster(ClusterArgs),
    /// Select a subset with one method.
    Select(SelectArgs),
    /// Benchmark methods over a parameter grid.
    Bench(BenchArgs),
    /// Check approximation bounds against exhaustive search.
    Verify(VerifyArgs),
}

impl Command {
    pub const NAMES: [&'static str; 5] = ["gen", "cluster", "select", "bench", "verify"];
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: muss_core::Error| e.to_string())
}

fn parse_quality_model(s: &str) -> Result<QualityModel, String> {
    s.parse().map_err(|e: muss_core::Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Sum,
    Min,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Sum => Criterion::SumDistance,
            CriterionArg::Min => Criterion::MinDistance,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    #[arg(long, default_value_t = 4)]
    pub blobs: usize,
    /// Within-blob standard deviation.
    #[arg(long, default_value_t = 0.1)]
    pub spread: f64,
    /// Standard deviation of blob centers.
    #[arg(long, default_value_t = 1.0)]
    pub separation: f64,
    /// uniform or blob-biased.
    #[arg(long, default_value = "uniform", value_parser = parse_quality_model)]
    pub quality_model: QualityModel,
    /// Fraction of items labeled relevant; 0 writes no labels.
    #[arg(long, default_value_t = 0.0)]
    pub relevant_frac: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// bin or jsonl; inferred from the output extension when omitted.
    #[arg(long)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub l: usize,
    /// Weight of the quality deviation term in the clustering cost.
    #[arg(long, default_value_t = 0.0)]
    pub quality_weight: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Relative WCSS improvement below which iteration stops.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Scale embeddings to unit length on load.
    #[arg(long)]
    pub l2_normalize: bool,
    /// Defaults to stdout.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// mmr, muss, muss-prime, dgds, rand-a, rand-b, random, topk or cluster-reps.
    #[arg(long, value_parser = parse_method)]
    pub method: Method,
    #[arg(long)]
    pub k: usize,
    /// Items picked per cluster or partition.
    #[arg(long)]
    pub kw: Option<usize>,
    /// Quality weight; defaults to 0.5 for the baselines, which use it only
    /// to score the result.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Quality weight for cluster selection; defaults to --lambda.
    #[arg(long)]
    pub lambda_c: Option<f64>,
    /// Clusters or partitions; taken from --model when given.
    #[arg(long)]
    pub l: Option<usize>,
    /// Clusters to select.
    #[arg(long)]
    pub m: Option<usize>,
    /// Precomputed model from `muss cluster`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Run the final greedy stage with quality scalers 0, 0.5 and 1 and keep the best.
    #[arg(long)]
    pub sigma_sweep: bool,
    #[arg(long, value_enum, default_value = "sum")]
    pub criterion: CriterionArg,
    /// Use the raw distance sum instead of its mean over the current selection.
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long, env = "MUSS_WORKERS", default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Clustering quality weight when fitting in-process.
    #[arg(long, default_value_t = 0.0)]
    pub quality_weight: f64,
    /// Clustering iteration cap when fitting in-process.
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long)]
    pub l2_normalize: bool,
    /// Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, required_unless_present = "gen_spec", conflicts_with = "gen_spec")]
    pub input: Option<PathBuf>,
    /// JSON or TOML file of synthetic dataset settings.
    #[arg(long)]
    pub gen_spec: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_method)]
    pub methods: Vec<Method>,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_delimiter = ',')]
    pub kw: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub lambda_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub lambda_c_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub l: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "MUSS_WORKERS", default_value_t = 1)]
    pub workers: usize,
    /// Skip the discarded warm-up run per cell.
    #[arg(long)]
    pub no_warmup: bool,
    #[arg(long, value_enum, default_value = "sum")]
    pub criterion: CriterionArg,
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long, default_value_t = 0.0)]
    pub quality_weight: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long)]
    pub l2_normalize: bool,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Lemma1,
    Theorem4,
    Theorem5,
    Lemma8,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Instance size (the largest size when --n-min is set).
    #[arg(long)]
    pub n: Option<usize>,
    /// Draw each trial's size uniformly from n-min..=n.
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub kw: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub lambda_c: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report path; defaults to a summary on stdout only.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
