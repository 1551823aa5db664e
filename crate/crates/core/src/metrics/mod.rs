//! Analysis quantities over items, elaborations and predictions.

mod bleu;
mod logistic;
mod similarity;

use serde::{Deserialize, Serialize};

use crate::cnl::{render_literal, render_rule};
use crate::count::{count_property, Scope};
use crate::logic::{derive_chain, FormalProblem, Literal};

pub use bleu::{bleu2, BLEU_EPSILON};
pub use logistic::{gradient, log_likelihood, logistic_fit, FitError, RegressionResult};
pub use similarity::{coherence, redundancy, semantic_similarity, similarity_profile, SimilarityProfile, Target};

/// Occurrences of the conclusion's predicate with the conclusion's polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LuckCount {
    pub context_hits: usize,
    pub elaboration_hits: usize,
    pub total: usize,
}

/// Counts the conclusion's predicate in context and elaboration. For an
/// unnegated conclusion only occurrences not preceded by `not` count; for a
/// negated one only those preceded by `not`.
pub fn total_luck(context_text: &str, elab_text: &str, conclusion: &Literal) -> LuckCount {
    let context_hits = count_property(context_text, &conclusion.property, Scope::Everywhere);
    let elaboration_hits = count_property(elab_text, &conclusion.property, Scope::Everywhere);
    LuckCount { context_hits, elaboration_hits, total: context_hits + elaboration_hits }
}

/// The perfect proof chain (fact, ordered rules, conclusion) and the
/// conclusions-only text (every derived literal, ending with the conclusion).
pub fn ideal_elaborations(problem: &FormalProblem) -> (String, String) {
    let mut proof = vec![render_literal(&problem.fact)];
    proof.extend(problem.chain.iter().map(render_rule));
    proof.push(render_literal(&problem.conclusion));
    let conclusions: Vec<String> = derive_chain(&problem.fact, &problem.chain).iter().map(render_literal).collect();
    (proof.join(" "), conclusions.join(" "))
}

/// Average ranks, ties sharing the mean of their positions.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; `None` when either side is constant or lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}
