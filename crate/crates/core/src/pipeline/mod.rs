//! File-based stages: gen → elaborate → predict → analyze.

mod analyze;
pub mod io;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{Backend, BackendError};
use crate::elaborate::{elaborate, ElaborationConfig, ElaborationRecord, Strategy};
use crate::generator::{generate_dataset, scramble_dataset, GenerationError, GenerationSpec};
use crate::item::{ItemRow, RowError};
use crate::lexicon::Lexicon;
use crate::predict::{score_answers, EvalError, ScoredPrediction};
use crate::TaskItem;

pub use analyze::{run_analyze, AnalyzeOutputs};

/// Results appended to disk per batch; bounds the work lost to an interruption.
const BATCH: usize = 64;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: {source}", path.display())]
    Json { path: PathBuf, line: usize, source: serde_json::Error },
    #[error("{}:{line}: {source}", path.display())]
    Row { path: PathBuf, line: usize, source: RowError },
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("no predictions for strategy none; deltas are undefined")]
    MissingNone,
    #[error("{stage}: all {count} pending job(s) failed; first error: {first}")]
    AllFailed { stage: &'static str, count: usize, first: String },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

/// A job that could not be completed, recorded instead of a guessed output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub item_id: String,
    pub strategy: Strategy,
    pub error: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StageSummary {
    pub computed: usize,
    pub reused: usize,
    pub skipped: usize,
}

type Key = (String, Strategy);

/// Generated items, optionally with antecedents scrambled.
pub fn run_gen(spec: &GenerationSpec, lexicon: &Lexicon, scramble: bool) -> Result<Vec<TaskItem>, PipelineError> {
    let items = generate_dataset(spec, lexicon)?;
    if scramble {
        Ok(scramble_dataset(&items, lexicon, spec.seed)?)
    } else {
        Ok(items)
    }
}

pub fn write_dataset(path: &Path, items: &[TaskItem]) -> Result<(), PipelineError> {
    let rows: Vec<ItemRow> = items.iter().map(TaskItem::to_row).collect();
    io::write_jsonl_atomic(path, &rows)
}

pub fn load_dataset(path: &Path, lexicon: &Lexicon) -> Result<Vec<TaskItem>, PipelineError> {
    let rows: Vec<ItemRow> = io::read_jsonl(path)?;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            TaskItem::from_row(r, lexicon).map_err(|source| PipelineError::Row { path: path.to_path_buf(), line: i + 1, source })
        })
        .collect()
}

fn pool(concurrency: usize) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(concurrency.max(1))
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))
}

/// Runs `work` for every job whose key is not yet in `out`, appending results as
/// batches finish, then rewrites `out` sorted by key. Failures go to the
/// `.skipped.jsonl` sidecar.
fn resumable_stage<J, R>(
    stage: &'static str,
    out: &Path,
    jobs: Vec<(Key, J)>,
    key_of: impl Fn(&R) -> Key,
    work: impl Fn(&J) -> Result<R, String> + Sync,
    concurrency: usize,
) -> Result<(Vec<R>, StageSummary), PipelineError>
where
    J: Sync,
    R: Serialize + DeserializeOwned + Send,
{
    let mut done: BTreeMap<Key, R> = BTreeMap::new();
    for r in io::read_jsonl_resumable::<R>(out)? {
        done.entry(key_of(&r)).or_insert(r);
    }
    let existing: Vec<&R> = done.values().collect();
    io::write_jsonl_atomic(out, &existing)?;

    let pending: Vec<&(Key, J)> = jobs.iter().filter(|(k, _)| !done.contains_key(k)).collect();
    let mut summary = StageSummary { reused: jobs.len() - pending.len(), ..Default::default() };
    let mut skips = Vec::new();
    let pool = pool(concurrency)?;
    let mut appender = io::Appender::open(out)?;
    for batch in pending.chunks(BATCH) {
        let results: Vec<Result<R, String>> = pool.install(|| batch.par_iter().map(|(_, j)| work(j)).collect());
        let mut ok = Vec::new();
        for ((key, _), res) in batch.iter().zip(results) {
            match res {
                Ok(r) => ok.push(r),
                Err(error) => {
                    log::warn!("{stage}: skipping {} / {}: {error}", key.0, key.1);
                    skips.push(SkipRecord { item_id: key.0.clone(), strategy: key.1, error });
                }
            }
        }
        appender.push(&ok)?;
        summary.computed += ok.len();
        for r in ok {
            done.insert(key_of(&r), r);
        }
    }
    drop(appender);
    summary.skipped = skips.len();

    let rows: Vec<R> = done.into_values().collect();
    io::write_jsonl_atomic(out, &rows)?;
    let sidecar = io::skipped_path(out);
    if skips.is_empty() {
        if sidecar.exists() {
            std::fs::remove_file(&sidecar).map_err(|source| PipelineError::Io { path: sidecar.clone(), source })?;
        }
    } else {
        io::write_jsonl_atomic(&sidecar, &skips)?;
    }
    if !pending.is_empty() && summary.computed == 0 {
        return Err(PipelineError::AllFailed { stage, count: pending.len(), first: skips[0].error.clone() });
    }
    Ok((rows, summary))
}

/// Elaborates every item under every requested strategy; `none` needs no record
/// and is ignored here.
pub fn run_elaborate(
    items: &[TaskItem],
    strategies: &[Strategy],
    backend: &dyn Backend,
    lexicon: &Lexicon,
    config: &ElaborationConfig,
    concurrency: usize,
    out: &Path,
) -> Result<(Vec<ElaborationRecord>, StageSummary), PipelineError> {
    let strategies: BTreeSet<Strategy> = strategies.iter().copied().filter(|s| *s != Strategy::None).collect();
    let jobs: Vec<(Key, (&TaskItem, Strategy))> = items
        .iter()
        .flat_map(|it| strategies.iter().map(move |&s| ((it.id.clone(), s), (it, s))))
        .collect();
    resumable_stage(
        "elaborate",
        out,
        jobs,
        |r: &ElaborationRecord| (r.item_id.clone(), r.strategy),
        |(item, s)| elaborate(item, *s, backend, lexicon, config).map_err(|e: BackendError| e.to_string()),
        concurrency,
    )
}

/// Scores every item under `none` plus every requested strategy (all strategies
/// present in `elaborations` when `strategies` is `None`).
pub fn run_predict(
    items: &[TaskItem],
    elaborations: &[ElaborationRecord],
    strategies: Option<&[Strategy]>,
    backend: &dyn Backend,
    concurrency: usize,
    out: &Path,
) -> Result<(Vec<ScoredPrediction>, StageSummary), PipelineError> {
    let by_key: BTreeMap<(&str, Strategy), &ElaborationRecord> =
        elaborations.iter().map(|r| ((r.item_id.as_str(), r.strategy), r)).collect();
    let mut wanted: BTreeSet<Strategy> = match strategies {
        Some(s) => s.iter().copied().collect(),
        None => elaborations.iter().map(|r| r.strategy).collect(),
    };
    wanted.insert(Strategy::None);
    let empties: BTreeMap<&str, ElaborationRecord> =
        items.iter().map(|it| (it.id.as_str(), ElaborationRecord::empty(&it.id))).collect();
    let jobs: Vec<(Key, (&TaskItem, Option<&ElaborationRecord>))> = items
        .iter()
        .flat_map(|it| {
            let by_key = &by_key;
            let empties = &empties;
            wanted.iter().map(move |&s| {
                let rec = if s == Strategy::None { empties.get(it.id.as_str()) } else { by_key.get(&(it.id.as_str(), s)).copied() };
                ((it.id.clone(), s), (it, rec))
            })
        })
        .collect();
    resumable_stage(
        "predict",
        out,
        jobs,
        |p: &ScoredPrediction| (p.item_id.clone(), p.strategy),
        |(item, rec)| match rec {
            Some(r) => score_answers(item, r, backend).map_err(|e| e.to_string()),
            None => Err("no elaboration record".to_owned()),
        },
        concurrency,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::MockBackend;
    use crate::generator::ContrapositionMode;

    fn spec() -> GenerationSpec {
        GenerationSpec {
            depth: 1..=2,
            breadth: 0..=2,
            contraposition: ContrapositionMode::Both,
            items_per_cell: 2,
            seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn dataset_round_trip() {
        let lex = Lexicon::builtin();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let items = run_gen(&spec(), &lex, false).unwrap();
        write_dataset(&path, &items).unwrap();
        assert_eq!(load_dataset(&path, &lex).unwrap(), items);
        let scrambled = run_gen(&spec(), &lex, true).unwrap();
        write_dataset(&path, &scrambled).unwrap();
        assert_eq!(load_dataset(&path, &lex).unwrap(), scrambled);
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let lex = Lexicon::builtin();
        let mock = MockBackend::new(lex.clone());
        let dir = tempfile::tempdir().unwrap();
        let items = run_gen(&spec(), &lex, false).unwrap();
        let strategies = [Strategy::Free, Strategy::Structured, Strategy::OracleFinal];
        let cfg = ElaborationConfig::default();

        let full = dir.path().join("full.jsonl");
        let (_, s) = run_elaborate(&items, &strategies, &mock, &lex, &cfg, 3, &full).unwrap();
        assert_eq!(s.computed, items.len() * 3);

        let part = dir.path().join("part.jsonl");
        run_elaborate(&items[..5], &strategies[..2], &mock, &lex, &cfg, 1, &part).unwrap();
        let mut text = std::fs::read_to_string(&part).unwrap();
        text.push_str("{\"item_id\": \"torn");
        std::fs::write(&part, text).unwrap();
        let (_, s) = run_elaborate(&items, &strategies, &mock, &lex, &cfg, 2, &part).unwrap();
        assert_eq!(s.reused, 10);
        assert_eq!(std::fs::read(&full).unwrap(), std::fs::read(&part).unwrap());
    }

    struct Down;

    impl Backend for Down {
        fn generate(&self, _: &crate::backends::GenerationRequest) -> Result<String, BackendError> {
            Err(BackendError::Transport { endpoint: "x".into(), attempts: 3, message: "refused".into() })
        }

        fn score_continuation(&self, _: &str, _: &str) -> Result<f64, BackendError> {
            Err(BackendError::Transport { endpoint: "x".into(), attempts: 3, message: "refused".into() })
        }
    }

    #[test]
    fn failures_are_recorded_not_guessed() {
        let lex = Lexicon::builtin();
        let dir = tempfile::tempdir().unwrap();
        let items = run_gen(&spec(), &lex, false).unwrap();
        let out = dir.path().join("e.jsonl");
        let err = run_elaborate(&items, &[Strategy::Free], &Down, &lex, &ElaborationConfig::default(), 2, &out).unwrap_err();
        assert!(matches!(err, PipelineError::AllFailed { stage: "elaborate", .. }));
        let skips: Vec<SkipRecord> = io::read_jsonl(&io::skipped_path(&out)).unwrap();
        assert_eq!(skips.len(), items.len());
        assert!(std::fs::read_to_string(&out).unwrap().is_empty());
    }

    #[test]
    fn predict_covers_none_and_requested() {
        let lex = Lexicon::builtin();
        let mock = MockBackend::new(lex.clone());
        let dir = tempfile::tempdir().unwrap();
        let items = run_gen(&spec(), &lex, false).unwrap();
        let (recs, _) = run_elaborate(
            &items,
            &[Strategy::OracleFinal],
            &mock,
            &lex,
            &ElaborationConfig::default(),
            2,
            &dir.path().join("e.jsonl"),
        )
        .unwrap();
        let (preds, _) = run_predict(&items, &recs, None, &mock, 2, &dir.path().join("p.jsonl")).unwrap();
        assert_eq!(preds.len(), items.len() * 2);
        let (again, s) = run_predict(&items, &recs, None, &mock, 4, &dir.path().join("p.jsonl")).unwrap();
        assert_eq!(again, preds);
        assert_eq!(s.computed, 0);
    }
}
