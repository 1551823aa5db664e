//! Accuracy grids, per-item metrics and regression reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{io, pool, PipelineError};
use crate::backends::Embedder;
use crate::elaborate::{ElaborationRecord, Strategy};
use crate::lexicon::Lexicon;
use crate::logic::Relation;
use crate::metrics::{bleu2, coherence, ideal_elaborations, logistic_fit, redundancy, similarity_profile, total_luck, LuckCount};
use crate::predict::{evaluate_run, AccuracyGrid, CellKey, ScoredPrediction};
use crate::TaskItem;

/// Luck values tabulated individually in the luck curve.
const LUCK_BINS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub item_id: String,
    pub strategy: Strategy,
    pub depth: usize,
    pub breadth: usize,
    pub effective_distraction: usize,
    pub contraposition: bool,
    pub unnegated_fact: bool,
    pub correct: bool,
    pub binary_prob: f64,
    pub luck: LuckCount,
    pub verisimilitude: Option<f64>,
    pub pertinence: Option<f64>,
    pub faithfulness: Option<f64>,
    pub bleu2_proof_chain: Option<f64>,
    pub bleu2_conclusions: Option<f64>,
    pub redundancy: Option<f64>,
    pub coherence: Option<f64>,
    pub classes: Vec<Relation>,
    pub degenerate: bool,
}

#[derive(Debug)]
pub struct AnalyzeOutputs {
    pub files: Vec<PathBuf>,
    pub grid: AccuracyGrid,
    pub metrics: Vec<MetricRow>,
}

fn metric_row(
    item: &TaskItem,
    elab: &ElaborationRecord,
    pred: &ScoredPrediction,
    embedder: &dyn Embedder,
) -> Result<MetricRow, PipelineError> {
    let empty = elab.full_text.is_empty();
    let (sim, bleus, coh) = if empty {
        (None, (None, None), None)
    } else {
        let (proof, ics) = ideal_elaborations(&item.problem);
        let text = elab.generated_text();
        (
            Some(similarity_profile(elab, item, embedder)?),
            (Some(bleu2(&text, &proof)), Some(bleu2(&text, &ics))),
            coherence(&elab.sentences, embedder)?,
        )
    };
    Ok(MetricRow {
        item_id: item.id.clone(),
        strategy: pred.strategy,
        depth: item.depth(),
        breadth: item.breadth(),
        effective_distraction: item.effective_distraction(),
        contraposition: item.problem.contraposition,
        unnegated_fact: item.problem.fact.affirmed(),
        correct: pred.correct,
        binary_prob: pred.binary_prob,
        luck: total_luck(&item.context_text(), &elab.generated_text(), &item.problem.conclusion),
        verisimilitude: sim.map(|s| s.verisimilitude),
        pertinence: sim.map(|s| s.pertinence),
        faithfulness: sim.map(|s| s.faithfulness),
        bleu2_proof_chain: bleus.0,
        bleu2_conclusions: bleus.1,
        redundancy: redundancy(&elab.sentences),
        coherence: coh,
        classes: elab.per_sentence_class.clone(),
        degenerate: elab.degenerate,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Rows = effective distraction, columns = depth.
fn grid_csv(keys: &BTreeSet<CellKey>, contraposition: bool, cell: impl Fn(CellKey) -> String) -> String {
    let max_eff = keys.iter().map(|k| k.effective_distraction).max().unwrap_or(0);
    let depths: BTreeSet<usize> = keys.iter().map(|k| k.depth).collect();
    let mut out = String::from("effective_distraction");
    for d in &depths {
        let _ = write!(out, ",depth_{d}");
    }
    out.push('\n');
    for e in 0..=max_eff {
        out.push_str(&e.to_string());
        for &d in &depths {
            out.push(',');
            out.push_str(&cell(CellKey { effective_distraction: e, depth: d, contraposition }));
        }
        out.push('\n');
    }
    out
}

fn regression_report(metrics: &[MetricRow], strategies: &BTreeSet<Strategy>) -> String {
    type Extract = fn(&MetricRow) -> Option<f64>;
    let models: [(&str, Extract); 3] = [
        ("verisimilitude", |r| r.verisimilitude),
        ("bleu2_proof_chain", |r| r.bleu2_proof_chain),
        ("bleu2_conclusions", |r| r.bleu2_conclusions),
    ];
    let mut out = String::new();
    for &s in strategies {
        let rows: Vec<&MetricRow> = metrics.iter().filter(|r| r.strategy == s).collect();
        let labels: Vec<bool> = rows.iter().map(|r| r.correct).collect();
        let x: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.depth as f64, r.effective_distraction as f64]).collect();
        let title = format!("[{s}] correct ~ depth + effective_distraction");
        out.push_str(&fit_text(&title, &x, &labels, &["depth", "effective_distraction"]));
        if s == Strategy::None {
            continue;
        }
        for (name, get) in models {
            let sub: Vec<(&&MetricRow, f64)> = rows.iter().filter_map(|r| get(r).map(|v| (r, v))).collect();
            let x: Vec<Vec<f64>> = sub.iter().map(|(r, v)| vec![r.depth as f64, r.breadth as f64, *v]).collect();
            let labels: Vec<bool> = sub.iter().map(|(r, _)| r.correct).collect();
            let title = format!("[{s}] correct ~ depth + breadth + {name}");
            out.push_str(&fit_text(&title, &x, &labels, &["depth", "breadth", name]));
        }
    }
    out
}

fn fit_text(title: &str, x: &[Vec<f64>], y: &[bool], names: &[&str]) -> String {
    match logistic_fit(x, y, names) {
        Ok(r) => r.report(title) + "\n",
        Err(e) => format!("{title}\n  not fitted: {e}\n\n"),
    }
}

/// Writes every analysis artifact into `out_dir`.
pub fn run_analyze(
    items: &[TaskItem],
    elaborations: &[ElaborationRecord],
    predictions: &[ScoredPrediction],
    embedder: &dyn Embedder,
    _lexicon: &Lexicon,
    concurrency: usize,
    out_dir: &Path,
) -> Result<AnalyzeOutputs, PipelineError> {
    if !predictions.iter().any(|p| p.strategy == Strategy::None) {
        return Err(PipelineError::MissingNone);
    }
    let grid = evaluate_run(predictions, items)?;
    let by_id: BTreeMap<&str, &TaskItem> = items.iter().map(|i| (i.id.as_str(), i)).collect();
    let by_key: BTreeMap<(&str, Strategy), &ElaborationRecord> =
        elaborations.iter().map(|r| ((r.item_id.as_str(), r.strategy), r)).collect();
    let mut preds: Vec<&ScoredPrediction> = predictions.iter().collect();
    preds.sort_by(|a, b| (&a.item_id, a.strategy).cmp(&(&b.item_id, b.strategy)));

    let pool = pool(concurrency)?;
    let metrics: Vec<MetricRow> = pool.install(|| {
        preds
            .par_iter()
            .map(|p| {
                let item = by_id[p.item_id.as_str()];
                let empty;
                let elab = match by_key.get(&(p.item_id.as_str(), p.strategy)) {
                    Some(r) => *r,
                    None => {
                        empty = ElaborationRecord { strategy: p.strategy, ..ElaborationRecord::empty(&p.item_id) };
                        &empty
                    }
                };
                metric_row(item, elab, p, embedder)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let mut files = Vec::new();
    let mut emit = |name: String, text: String| -> Result<(), PipelineError> {
        let path = out_dir.join(name);
        io::write_text_atomic(&path, &text)?;
        files.push(path);
        Ok(())
    };

    let strategies = grid.strategies();
    let keys = grid.keys();
    let flags: BTreeSet<bool> = keys.iter().map(|k| k.contraposition).collect();
    for &s in &strategies {
        for &cp in &flags {
            let tag = format!("{s}_contraposition_{cp}");
            emit(format!("accuracy_{tag}.csv"), grid_csv(&keys, cp, |k| fmt_opt(grid.accuracy(s, k))))?;
            emit(
                format!("count_{tag}.csv"),
                grid_csv(&keys, cp, |k| grid.cells.get(&(s, k)).map(|t| t.total).unwrap_or(0).to_string()),
            )?;
            emit(format!("delta_{tag}.csv"), grid_csv(&keys, cp, |k| fmt_opt(grid.delta(s, Strategy::None, k))))?;
        }
    }
    for &cp in &flags {
        let best = grid_csv(&keys, cp, |k| {
            let mut best: Option<(Strategy, f64)> = None;
            for &s in strategies.iter().filter(|s| s.is_dynamic()) {
                if let Some(a) = grid.accuracy(s, k) {
                    if best.is_none_or(|(_, b)| a > b) {
                        best = Some((s, a));
                    }
                }
            }
            best.map(|(s, a)| format!("{s}:{a:.6}")).unwrap_or_default()
        });
        emit(format!("best_elaboration_contraposition_{cp}.csv"), best)?;
    }

    let mut summary = String::from("strategy,n,correct,accuracy,delta_vs_none\n");
    let mut unnegated = String::from(
        "strategy,n_all,accuracy_all,n_unnegated_fact,accuracy_unnegated_fact,gap,delta_vs_none_all,delta_vs_none_unnegated_fact\n",
    );
    let none_all = grid.overall_accuracy(Strategy::None);
    let none_un = grid.unnegated_fact.get(&Strategy::None).and_then(|t| t.accuracy());
    for &s in &strategies {
        let all = grid.overall[&s];
        let un = grid.unnegated_fact.get(&s).copied().unwrap_or_default();
        let d_all = all.accuracy().zip(none_all).map(|(a, b)| a - b);
        let d_un = un.accuracy().zip(none_un).map(|(a, b)| a - b);
        let _ = writeln!(summary, "{s},{},{},{},{}", all.total, all.correct, fmt_opt(all.accuracy()), fmt_opt(d_all));
        let _ = writeln!(
            unnegated,
            "{s},{},{},{},{},{},{},{}",
            all.total,
            fmt_opt(all.accuracy()),
            un.total,
            fmt_opt(un.accuracy()),
            fmt_opt(grid.unnegated_gap(s)),
            fmt_opt(d_all),
            fmt_opt(d_un)
        );
    }
    emit("summary.csv".into(), summary)?;
    emit("unnegated_fact.csv".into(), unnegated)?;

    let mut hist: BTreeMap<(Strategy, usize), (usize, f64, usize)> = BTreeMap::new();
    for m in &metrics {
        let e = hist.entry((m.strategy, m.luck.total)).or_default();
        e.0 += 1;
        e.1 += m.binary_prob;
        e.2 += usize::from(m.correct);
    }
    let mut histogram = String::from("strategy,luck,count\n");
    let mut curve = String::from("strategy,luck,n,mean_binary_prob,accuracy\n");
    for ((s, luck), (n, bp, c)) in &hist {
        let _ = writeln!(histogram, "{s},{luck},{n}");
        if *luck < LUCK_BINS {
            let _ = writeln!(curve, "{s},{luck},{n},{:.6},{:.6}", bp / *n as f64, *c as f64 / *n as f64);
        }
    }
    emit("luck_histogram.csv".into(), histogram)?;
    emit("luck_curve.csv".into(), curve)?;
    emit("regression.txt".into(), regression_report(&metrics, &strategies))?;

    let path = out_dir.join("metrics.jsonl");
    io::write_jsonl_atomic(&path, &metrics)?;
    files.push(path);
    Ok(AnalyzeOutputs { files, grid, metrics })
}
