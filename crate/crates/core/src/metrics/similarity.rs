use serde::{Deserialize, Serialize};

use super::bleu2;
use crate::backends::{cosine, BackendError, Embedder};
use crate::cnl::render_literal;
use crate::elaborate::{build_question, ElaborationRecord};
use crate::TaskItem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Conclusion,
    Question,
    Context,
}

impl Target {
    pub fn text(self, item: &TaskItem) -> String {
        match self {
            Target::Conclusion => render_literal(&item.problem.conclusion),
            Target::Question => build_question(item),
            Target::Context => item.context_text(),
        }
    }
}

/// Cosine between the embeddings of the elaboration and the target text.
pub fn semantic_similarity(
    elab: &ElaborationRecord,
    target: Target,
    item: &TaskItem,
    embedder: &dyn Embedder,
) -> Result<f64, BackendError> {
    let v = embedder.embed(&[elab.full_text.clone(), target.text(item)])?;
    Ok(cosine(&v[0], &v[1]))
}

/// Similarity of an elaboration to conclusion, question and context.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityProfile {
    pub verisimilitude: f64,
    pub pertinence: f64,
    pub faithfulness: f64,
}

/// All three similarities from a single embedding call.
pub fn similarity_profile(
    elab: &ElaborationRecord,
    item: &TaskItem,
    embedder: &dyn Embedder,
) -> Result<SimilarityProfile, BackendError> {
    let texts = [
        elab.full_text.clone(),
        Target::Conclusion.text(item),
        Target::Question.text(item),
        Target::Context.text(item),
    ];
    let v = embedder.embed(&texts)?;
    Ok(SimilarityProfile {
        verisimilitude: cosine(&v[0], &v[1]),
        pertinence: cosine(&v[0], &v[2]),
        faithfulness: cosine(&v[0], &v[3]),
    })
}

/// Mean BLEU2 over ordered sentence pairs; 1 for a single sentence, absent for none.
pub fn redundancy(sentences: &[String]) -> Option<f64> {
    match sentences.len() {
        0 => None,
        1 => Some(1.0),
        n => {
            let mut sum = 0.0;
            for (i, a) in sentences.iter().enumerate() {
                for (j, b) in sentences.iter().enumerate() {
                    if i != j {
                        sum += bleu2(a, b);
                    }
                }
            }
            Some(sum / (n * (n - 1)) as f64)
        }
    }
}

/// Mean embedding cosine over unordered sentence pairs, with the conventions of
/// [`redundancy`].
pub fn coherence(sentences: &[String], embedder: &dyn Embedder) -> Result<Option<f64>, BackendError> {
    match sentences.len() {
        0 => Ok(None),
        1 => Ok(Some(1.0)),
        n => {
            let v = embedder.embed(sentences)?;
            let mut sum = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    sum += cosine(&v[i], &v[j]);
                }
            }
            Ok(Some(sum / (n * (n - 1) / 2) as f64))
        }
    }
}
