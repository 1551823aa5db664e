mod args;

use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use chainruler::backends::{
    Backend, DecodingMode, DecodingPolicy, Embedder, FallbackEmbedder, HttpBackend, HttpConfig, HttpEmbedder, MockBackend,
};
use chainruler::elaborate::{ElaborationConfig, ElaborationRecord, Strategy};
use chainruler::generator::{GenerationSpec, NegationRates};
use chainruler::pipeline::{self, io, StageSummary};
use chainruler::predict::ScoredPrediction;
use chainruler::{fixtures, Lexicon};
use clap::Parser;

use args::{AnalyzeArgs, BackendArgs, BackendKind, Cli, Command, ElaborateArgs, EmbedderKind, FileConfig, GenArgs, PredictArgs};

const DEFAULT_CONCURRENCY: usize = 4;
const DEFAULT_RETRIES: u32 = 2;

/// Bad invocation detected after argument parsing; exits with status 2 like
/// clap's own errors.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose, cli.quiet);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn init_logging(verbose: u8, quiet: bool) {
    let level = match (quiet, verbose) {
        (true, _) => log::LevelFilter::Warn,
        (false, 0) => log::LevelFilter::Info,
        (false, 1) => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().format_timestamp(None).init();
}

fn run(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let lexicon = match &cli.lexicon {
        Some(p) => Lexicon::from_file(p).map_err(|e| usage(format!("lexicon {}: {e}", p.display())))?,
        None => Lexicon::builtin(),
    };
    match cli.command {
        Command::Gen(a) => gen(a, &file, &lexicon),
        Command::Elaborate(a) => elaborate(a, &file, &lexicon),
        Command::Predict(a) => predict(a, &file, &lexicon),
        Command::Analyze(a) => analyze(a, &file, &lexicon),
    }
}

fn gen(a: GenArgs, file: &FileConfig, lexicon: &Lexicon) -> Result<()> {
    let items = if a.fixtures.is_some() {
        fixtures::worked_examples()
    } else {
        let spec = GenerationSpec {
            depth: a.depth,
            breadth: a.breadth,
            contraposition: a.contraposition,
            items_per_cell: a.per_cell,
            seed: a.seed.or(file.seed).unwrap_or(0),
            rates: NegationRates {
                fact: a.fact_negation_rate,
                conclusion: a.conclusion_negation_rate,
                intermediary: a.intermediary_negation_rate,
            },
        };
        spec.validate().map_err(|e| usage(e.to_string()))?;
        pipeline::run_gen(&spec, lexicon, a.scramble)?
    };
    pipeline::write_dataset(&a.output, &items)?;
    log::info!("wrote {} items to {}", items.len(), a.output.display());
    Ok(())
}

fn strategies_from(flags: Vec<Vec<Strategy>>, file: &FileConfig) -> Result<Option<Vec<Strategy>>> {
    let mut out: Vec<Strategy> = flags.into_iter().flatten().collect();
    if out.is_empty() {
        let Some(names) = &file.strategies else { return Ok(None) };
        for n in names {
            out.extend(args::parse_strategies(n).map_err(|e| usage(format!("config strategies: {e}")))?);
        }
    }
    out.sort();
    out.dedup();
    Ok(Some(out))
}

fn make_backend(b: &BackendArgs, file: &FileConfig, lexicon: &Lexicon) -> Result<(Box<dyn Backend>, usize)> {
    let concurrency = b.concurrency.or(file.concurrency).unwrap_or(DEFAULT_CONCURRENCY);
    if concurrency == 0 {
        return Err(usage("--concurrency must be at least 1"));
    }
    let backend: Box<dyn Backend> = match b.backend.or(file.backend).unwrap_or(BackendKind::Mock) {
        BackendKind::Mock => Box::new(MockBackend::new(lexicon.clone())),
        BackendKind::Http => {
            let url = b
                .backend_url
                .clone()
                .or_else(|| file.backend_url.clone())
                .ok_or_else(|| usage("--backend http needs --backend-url or CHAINRULER_BACKEND_URL"))?;
            let mut cfg = HttpConfig::new(url);
            cfg.retries = b.retries.or(file.retries).unwrap_or(DEFAULT_RETRIES);
            cfg.max_in_flight = concurrency;
            Box::new(HttpBackend::new(cfg))
        }
    };
    Ok((backend, concurrency))
}

fn decoding(a: &ElaborateArgs, file: &FileConfig) -> Result<ElaborationConfig> {
    let mut cfg = ElaborationConfig { seed: a.seed.or(file.seed).unwrap_or(0), ..ElaborationConfig::default() };
    let top_p = a.top_p.or(file.top_p);
    let beam = a.beam_width.or(file.beam_width);
    let open = a.max_new_tokens_open.or(file.max_new_tokens_open);
    let piecemeal = a.max_new_tokens_piecemeal.or(file.max_new_tokens_piecemeal);
    let adjust = |p: &mut DecodingPolicy, budget: Option<usize>| {
        match &mut p.mode {
            DecodingMode::Nucleus { top_p: t } => *t = top_p.unwrap_or(*t),
            DecodingMode::Beam { beam_width: w } => *w = beam.unwrap_or(*w),
        }
        if let Some(n) = budget {
            p.max_new_tokens = n;
        }
        p.validate().map_err(|e| usage(e.to_string()))
    };
    adjust(&mut cfg.free, open)?;
    adjust(&mut cfg.fewshot, open)?;
    adjust(&mut cfg.structured, piecemeal)?;
    adjust(&mut cfg.recursive, piecemeal)?;
    Ok(cfg)
}

fn report(stage: &str, out: &Path, s: &StageSummary) {
    log::info!(
        "{stage}: {} computed, {} reused, {} skipped -> {}",
        s.computed,
        s.reused,
        s.skipped,
        out.display()
    );
    if s.skipped > 0 {
        log::warn!("{stage}: skipped jobs listed in {}", io::skipped_path(out).display());
    }
}

fn elaborate(a: ElaborateArgs, file: &FileConfig, lexicon: &Lexicon) -> Result<()> {
    let strategies = strategies_from(a.strategies.clone(), file)?.unwrap_or_else(|| Strategy::ALL.to_vec());
    let config = decoding(&a, file)?;
    let (backend, concurrency) = make_backend(&a.backend, file, lexicon)?;
    let items = pipeline::load_dataset(&a.dataset, lexicon).context("loading dataset")?;
    let (_, summary) =
        pipeline::run_elaborate(&items, &strategies, backend.as_ref(), lexicon, &config, concurrency, &a.output)?;
    report("elaborate", &a.output, &summary);
    Ok(())
}

fn predict(a: PredictArgs, file: &FileConfig, lexicon: &Lexicon) -> Result<()> {
    let strategies = strategies_from(a.strategies.clone(), file)?;
    let (backend, concurrency) = make_backend(&a.backend, file, lexicon)?;
    let items = pipeline::load_dataset(&a.dataset, lexicon).context("loading dataset")?;
    let elaborations: Vec<ElaborationRecord> = match &a.elaborations {
        Some(p) => io::read_jsonl(p).context("loading elaborations")?,
        None => Vec::new(),
    };
    let (_, summary) = pipeline::run_predict(
        &items,
        &elaborations,
        strategies.as_deref(),
        backend.as_ref(),
        concurrency,
        &a.output,
    )?;
    report("predict", &a.output, &summary);
    Ok(())
}

fn analyze(a: AnalyzeArgs, file: &FileConfig, lexicon: &Lexicon) -> Result<()> {
    let concurrency = a.concurrency.or(file.concurrency).unwrap_or(DEFAULT_CONCURRENCY);
    if concurrency == 0 {
        return Err(usage("--concurrency must be at least 1"));
    }
    let embedder: Box<dyn Embedder> = match a.embedder.or(file.embedder).unwrap_or(EmbedderKind::Fallback) {
        EmbedderKind::Fallback => Box::new(FallbackEmbedder),
        EmbedderKind::Http => {
            let url = a
                .embedder_url
                .clone()
                .or_else(|| file.embedder_url.clone())
                .ok_or_else(|| usage("--embedder http needs --embedder-url or CHAINRULER_EMBEDDER_URL"))?;
            let mut cfg = HttpConfig::new(url);
            cfg.retries = a.retries.or(file.retries).unwrap_or(DEFAULT_RETRIES);
            cfg.max_in_flight = concurrency;
            Box::new(HttpEmbedder::new(cfg))
        }
    };
    let items = pipeline::load_dataset(&a.dataset, lexicon).context("loading dataset")?;
    let elaborations: Vec<ElaborationRecord> = match &a.elaborations {
        Some(p) => io::read_jsonl(p).context("loading elaborations")?,
        None => Vec::new(),
    };
    let predictions: Vec<ScoredPrediction> = io::read_jsonl(&a.predictions).context("loading predictions")?;
    let out = pipeline::run_analyze(&items, &elaborations, &predictions, embedder.as_ref(), lexicon, concurrency, &a.out_dir)?;

    println!("{:<20} {:>8} {:>8}", "strategy", "accuracy", "delta");
    let base = out.grid.overall_accuracy(Strategy::None);
    for s in out.grid.strategies() {
        let acc = out.grid.overall_accuracy(s);
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), |v| format!("{v:.3}"));
        let delta = acc.zip(base).map(|(a, b)| a - b);
        println!("{:<20} {:>8} {:>8}", s.as_str(), fmt(acc), fmt(delta));
    }
    log::info!("wrote {} files to {}", out.files.len(), a.out_dir.display());
    Ok(())
}
