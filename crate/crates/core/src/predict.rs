//! Answer scoring, argmax prediction, and accuracy aggregation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{Backend, BackendError};
use crate::cnl::render_literal;
use crate::elaborate::{ElaborationRecord, Strategy};
use crate::TaskItem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPrediction {
    pub item_id: String,
    pub strategy: Strategy,
    /// Log-probabilities of conclusion, negation and complement.
    pub logprobs: [f64; 3],
    pub chosen: usize,
    pub correct: bool,
    /// Probability of the conclusion against its negation alone.
    pub binary_prob: f64,
}

/// Context followed by the elaboration, space-separated, with a trailing space
/// before the answer continuation.
pub fn score_prompt(item: &TaskItem, elab: &ElaborationRecord) -> String {
    let ctx = item.context_text();
    if elab.full_text.is_empty() {
        format!("{ctx} ")
    } else {
        format!("{ctx} {} ", elab.full_text)
    }
}

/// Index of the first maximum.
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// `exp(a) / (exp(a) + exp(b))` without overflow.
pub fn binary_normalize(logp_a: f64, logp_nota: f64) -> f64 {
    let d = logp_nota - logp_a;
    if d <= 0.0 {
        1.0 / (1.0 + d.exp())
    } else {
        let e = (-d).exp();
        e / (1.0 + e)
    }
}

pub fn score_answers(item: &TaskItem, elab: &ElaborationRecord, backend: &dyn Backend) -> Result<ScoredPrediction, BackendError> {
    let prompt = score_prompt(item, elab);
    let mut logprobs = [0.0; 3];
    for (lp, answer) in logprobs.iter_mut().zip(item.answers().iter()) {
        *lp = backend.score_continuation(&prompt, &render_literal(answer))?;
    }
    let chosen = argmax_first(&logprobs);
    Ok(ScoredPrediction {
        item_id: item.id.clone(),
        strategy: elab.strategy,
        logprobs,
        chosen,
        correct: chosen == 0,
        binary_prob: binary_normalize(logprobs[0], logprobs[1]),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub effective_distraction: usize,
    pub depth: usize,
    pub contraposition: bool,
}

impl CellKey {
    pub fn of(item: &TaskItem) -> Self {
        CellKey {
            effective_distraction: item.effective_distraction(),
            depth: item.depth(),
            contraposition: item.problem.contraposition,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
}

impl Tally {
    fn add(&mut self, correct: bool) {
        self.total += 1;
        self.correct += usize::from(correct);
    }

    /// `None` for an empty tally.
    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AccuracyGrid {
    pub cells: BTreeMap<(Strategy, CellKey), Tally>,
    pub overall: BTreeMap<Strategy, Tally>,
    /// Items whose fact is not negated.
    pub unnegated_fact: BTreeMap<Strategy, Tally>,
}

impl AccuracyGrid {
    pub fn strategies(&self) -> BTreeSet<Strategy> {
        self.overall.keys().copied().collect()
    }

    pub fn keys(&self) -> BTreeSet<CellKey> {
        self.cells.keys().map(|(_, k)| *k).collect()
    }

    pub fn accuracy(&self, strategy: Strategy, key: CellKey) -> Option<f64> {
        self.cells.get(&(strategy, key)).and_then(Tally::accuracy)
    }

    /// Accuracy of `strategy` minus accuracy of `baseline`; absent when either is.
    pub fn delta(&self, strategy: Strategy, baseline: Strategy, key: CellKey) -> Option<f64> {
        Some(self.accuracy(strategy, key)? - self.accuracy(baseline, key)?)
    }

    pub fn overall_accuracy(&self, strategy: Strategy) -> Option<f64> {
        self.overall.get(&strategy).and_then(Tally::accuracy)
    }

    /// Accuracy gap between the unnegated-fact subset and all items.
    pub fn unnegated_gap(&self, strategy: Strategy) -> Option<f64> {
        Some(self.unnegated_fact.get(&strategy)?.accuracy()? - self.overall_accuracy(strategy)?)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("prediction references unknown item {0:?}")]
    UnknownItem(String),
}

pub fn evaluate_run(predictions: &[ScoredPrediction], items: &[TaskItem]) -> Result<AccuracyGrid, EvalError> {
    let by_id: BTreeMap<&str, &TaskItem> = items.iter().map(|i| (i.id.as_str(), i)).collect();
    let mut grid = AccuracyGrid::default();
    for p in predictions {
        let item = by_id.get(p.item_id.as_str()).ok_or_else(|| EvalError::UnknownItem(p.item_id.clone()))?;
        grid.cells.entry((p.strategy, CellKey::of(item))).or_default().add(p.correct);
        grid.overall.entry(p.strategy).or_default().add(p.correct);
        if item.problem.fact.affirmed() {
            grid.unnegated_fact.entry(p.strategy).or_default().add(p.correct);
        }
    }
    Ok(grid)
}
