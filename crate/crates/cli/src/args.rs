use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use anyhow::Context;
use chainruler::elaborate::Strategy;
use chainruler::generator::ContrapositionMode;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "chainruler", version, about = "Generate, elaborate, score and analyze ChainRuler deduction tasks")]
pub struct Cli {
    /// TOML file with defaults for backend, decoding and concurrency settings.
    #[arg(long, global = true, env = "CHAINRULER_CONFIG")]
    pub config: Option<PathBuf>,

    /// Custom lexicon file (names, complement pairs, predicates).
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,

    /// More logging (-v debug, -vv trace).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    /// Only warnings and errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a balanced dataset.
    Gen(GenArgs),
    /// Produce elaborations for a dataset.
    Elaborate(ElaborateArgs),
    /// Score the answer options with and without elaborations.
    Predict(PredictArgs),
    /// Accuracy grids, per-item metrics and regression reports.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FixtureSet {
    Examples,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Chain lengths, e.g. `1..5` (inclusive) or `3`.
    #[arg(long, value_parser = parse_range, default_value = "1..5")]
    pub depth: RangeInclusive<usize>,
    /// Distractor counts, e.g. `0..5`.
    #[arg(long, value_parser = parse_range, default_value = "0..5")]
    pub breadth: RangeInclusive<usize>,
    #[arg(long, default_value = "both", value_parser = parse_contraposition)]
    pub contraposition: ContrapositionMode,
    #[arg(long, default_value_t = 10)]
    pub per_cell: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0.5)]
    pub fact_negation_rate: f64,
    #[arg(long, default_value_t = 0.5)]
    pub conclusion_negation_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    pub intermediary_negation_rate: f64,
    /// Replace every rule antecedent by an unrelated predicate.
    #[arg(long)]
    pub scramble: bool,
    /// Emit hand-encoded reference items instead of sampling.
    #[arg(long, value_enum)]
    pub fixtures: Option<FixtureSet>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Http,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedderKind {
    Fallback,
    Http,
}

#[derive(Debug, Clone, Args)]
pub struct BackendArgs {
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    #[arg(long, env = "CHAINRULER_BACKEND_URL")]
    pub backend_url: Option<String>,
    /// Retries per request after the first failure.
    #[arg(long)]
    pub retries: Option<u32>,
    /// Worker threads (and maximum in-flight requests).
    #[arg(long)]
    pub concurrency: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ElaborateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Comma-separated strategy names, or `all`.
    #[arg(long, value_delimiter = ',', value_parser = parse_strategies)]
    pub strategies: Vec<Vec<Strategy>>,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub top_p: Option<f64>,
    #[arg(long)]
    pub beam_width: Option<usize>,
    /// Token budget of free and fewshot completions.
    #[arg(long)]
    pub max_new_tokens_open: Option<usize>,
    /// Token budget of each structured or recursive step.
    #[arg(long)]
    pub max_new_tokens_piecemeal: Option<usize>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Elaborations to score; without it only strategy `none` is scored.
    #[arg(long)]
    pub elaborations: Option<PathBuf>,
    /// Restrict to these strategies (default: all present in the elaborations).
    #[arg(long, value_delimiter = ',', value_parser = parse_strategies)]
    pub strategies: Vec<Vec<Strategy>>,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub elaborations: Option<PathBuf>,
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long, value_enum)]
    pub embedder: Option<EmbedderKind>,
    #[arg(long, env = "CHAINRULER_EMBEDDER_URL")]
    pub embedder_url: Option<String>,
    #[arg(long)]
    pub retries: Option<u32>,
    #[arg(long)]
    pub concurrency: Option<usize>,
    #[arg(short, long)]
    pub out_dir: PathBuf,
}

/// Values read from `--config`; every field is optional and loses to flags and
/// environment variables.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub backend: Option<BackendKind>,
    pub backend_url: Option<String>,
    pub embedder: Option<EmbedderKind>,
    pub embedder_url: Option<String>,
    pub seed: Option<u64>,
    pub concurrency: Option<usize>,
    pub retries: Option<u32>,
    pub top_p: Option<f64>,
    pub beam_width: Option<usize>,
    pub max_new_tokens_open: Option<usize>,
    pub max_new_tokens_piecemeal: Option<usize>,
    pub strategies: Option<Vec<String>>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else { return Ok(FileConfig::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).map_err(|e| crate::UsageError(format!("{}: {e}", path.display())).into())
    }
}

/// `a..b` (inclusive) or a single number.
pub fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("{t:?} is not a non-negative integer"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
        None => {
            let v = num(s)?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(format!("empty range {s:?}"));
    }
    Ok(lo..=hi)
}

fn parse_contraposition(s: &str) -> Result<ContrapositionMode, String> {
    s.parse()
}

/// One strategy name, or `all` for every strategy.
pub fn parse_strategies(s: &str) -> Result<Vec<Strategy>, String> {
    if s == "all" {
        return Ok(Strategy::ALL.to_vec());
    }
    s.parse::<Strategy>().map(|st| vec![st]).map_err(|e| {
        let names: Vec<&str> = Strategy::ALL.iter().map(|s| s.as_str()).collect();
        format!("{e}; expected one of: all, {}", names.join(", "))
    })
}
