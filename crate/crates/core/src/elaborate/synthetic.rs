use rand::seq::{IteratorRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ElaborationRecord, Strategy};
use crate::cnl::render_literal;
use crate::lexicon::Lexicon;
use crate::logic::derive_chain;
use crate::TaskItem;

const REPEATS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// One random answer, four times.
    BaselineAnswers,
    /// Four random context statements.
    BaselineContext,
    /// Every intermediary conclusion, in derivation order.
    OracleIntermediary,
    /// The conclusion, four times.
    OracleFinal,
}

/// Context expansions built from the item itself, without a model.
pub fn synthetic_expansion(item: &TaskItem, kind: SyntheticKind, seed: u64, lexicon: &Lexicon) -> ElaborationRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (strategy, sentences) = match kind {
        SyntheticKind::BaselineAnswers => {
            let answer = item.answers().choose(&mut rng).map(render_literal).expect("three answers");
            (Strategy::BaselineAnswers, vec![answer; REPEATS])
        }
        SyntheticKind::BaselineContext => {
            let ctx = item.context_sentences();
            let picked = if ctx.len() >= REPEATS {
                let mut p = ctx.into_iter().choose_multiple(&mut rng, REPEATS);
                p.shuffle(&mut rng);
                p
            } else {
                (0..REPEATS).map(|_| ctx.choose(&mut rng).expect("non-empty context").clone()).collect()
            };
            (Strategy::BaselineContext, picked)
        }
        SyntheticKind::OracleIntermediary => {
            let chain = derive_chain(&item.problem.fact, &item.problem.chain);
            (Strategy::OracleIntermediary, chain.iter().map(render_literal).collect())
        }
        SyntheticKind::OracleFinal => (Strategy::OracleFinal, vec![render_literal(&item.problem.conclusion); REPEATS]),
    };
    let full_text = sentences.join(" ");
    ElaborationRecord::assemble(item, strategy, String::new(), sentences, full_text, None, false, lexicon)
}
