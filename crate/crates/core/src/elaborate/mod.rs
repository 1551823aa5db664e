//! Problem elaboration: model-generated or synthetic text appended to a context
//! before answers are scored.

mod dynamic;
mod prompts;
mod synthetic;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::backends::{Backend, BackendError, DecodingPolicy, DEFAULT_BEAM_WIDTH, DEFAULT_TOP_P, OPEN_MAX_NEW_TOKENS, PIECEMEAL_MAX_NEW_TOKENS};
use crate::cnl::classify_sentence;
use crate::lexicon::Lexicon;
use crate::logic::Relation;
use crate::text::{fnv1a, mix_seed};
use crate::TaskItem;

pub use dynamic::{elaborate_fewshot, elaborate_free, elaborate_recursive, elaborate_structured, truncate_fewshot};
pub use prompts::{
    build_question, build_question_shuffled, fewshot_samples, piecemeal_query, query, FewshotVariant, FEWSHOT_RESOURCE,
    PIECEMEAL_LEAD_IN, QUERY_PREFIX,
};
pub use synthetic::{synthetic_expansion, SyntheticKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    None,
    Free,
    FewshotIc,
    FewshotPc,
    FewshotPcic,
    Structured,
    Recursive,
    BaselineAnswers,
    BaselineContext,
    OracleIntermediary,
    OracleFinal,
}

impl Strategy {
    pub const ALL: [Strategy; 11] = [
        Strategy::None,
        Strategy::Free,
        Strategy::FewshotIc,
        Strategy::FewshotPc,
        Strategy::FewshotPcic,
        Strategy::Structured,
        Strategy::Recursive,
        Strategy::BaselineAnswers,
        Strategy::BaselineContext,
        Strategy::OracleIntermediary,
        Strategy::OracleFinal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::Free => "free",
            Strategy::FewshotIc => "fewshot_ic",
            Strategy::FewshotPc => "fewshot_pc",
            Strategy::FewshotPcic => "fewshot_pcic",
            Strategy::Structured => "structured",
            Strategy::Recursive => "recursive",
            Strategy::BaselineAnswers => "baseline_answers",
            Strategy::BaselineContext => "baseline_context",
            Strategy::OracleIntermediary => "oracle_intermediary",
            Strategy::OracleFinal => "oracle_final",
        }
    }

    /// Whether the strategy calls the model.
    pub fn is_dynamic(self) -> bool {
        matches!(
            self,
            Strategy::Free | Strategy::FewshotIc | Strategy::FewshotPc | Strategy::FewshotPcic | Strategy::Structured | Strategy::Recursive
        )
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown strategy {0:?}")]
pub struct UnknownStrategy(pub String);

impl FromStr for Strategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL.into_iter().find(|st| st.as_str() == s).ok_or_else(|| UnknownStrategy(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElaborationRecord {
    pub item_id: String,
    pub strategy: Strategy,
    /// The elicitation prompt; empty for synthetic strategies.
    pub query: String,
    pub sentences: Vec<String>,
    /// The text appended to the context when scoring.
    pub full_text: String,
    pub per_sentence_class: Vec<Relation>,
    pub decoding: Option<DecodingPolicy>,
    pub degenerate: bool,
}

impl ElaborationRecord {
    /// The empty elaboration of strategy `none`.
    pub fn empty(item_id: &str) -> Self {
        ElaborationRecord {
            item_id: item_id.to_owned(),
            strategy: Strategy::None,
            query: String::new(),
            sentences: Vec::new(),
            full_text: String::new(),
            per_sentence_class: Vec::new(),
            decoding: None,
            degenerate: false,
        }
    }

    /// The generated sentences alone, without question or lead-in.
    pub fn generated_text(&self) -> String {
        self.sentences.join(" ")
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        item: &TaskItem,
        strategy: Strategy,
        query: String,
        sentences: Vec<String>,
        full_text: String,
        decoding: Option<DecodingPolicy>,
        degenerate: bool,
        lexicon: &Lexicon,
    ) -> Self {
        let per_sentence_class =
            sentences.iter().map(|s| classify_sentence(s, &item.problem, lexicon).relation).collect();
        ElaborationRecord {
            item_id: item.id.clone(),
            strategy,
            query,
            sentences,
            full_text,
            per_sentence_class,
            decoding,
            degenerate,
        }
    }
}

/// Decoding settings per dynamic strategy plus the base seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElaborationConfig {
    pub seed: u64,
    pub free: DecodingPolicy,
    pub fewshot: DecodingPolicy,
    pub structured: DecodingPolicy,
    pub recursive: DecodingPolicy,
}

impl Default for ElaborationConfig {
    fn default() -> Self {
        ElaborationConfig {
            seed: 0,
            free: DecodingPolicy::nucleus(DEFAULT_TOP_P, OPEN_MAX_NEW_TOKENS, 0),
            fewshot: DecodingPolicy::beam(DEFAULT_BEAM_WIDTH, OPEN_MAX_NEW_TOKENS, 0),
            structured: DecodingPolicy::nucleus(DEFAULT_TOP_P, PIECEMEAL_MAX_NEW_TOKENS, 0),
            recursive: DecodingPolicy::beam(DEFAULT_BEAM_WIDTH, PIECEMEAL_MAX_NEW_TOKENS, 0),
        }
    }
}

impl ElaborationConfig {
    /// Seed of one (item, strategy) record, independent of processing order.
    pub fn record_seed(&self, item_id: &str, strategy: Strategy) -> u64 {
        let key = format!("{item_id}\u{1f}{strategy}");
        mix_seed(self.seed, fnv1a(key.as_bytes()))
    }
}

/// Produces the elaboration of `item` under `strategy`.
pub fn elaborate(
    item: &TaskItem,
    strategy: Strategy,
    backend: &dyn Backend,
    lexicon: &Lexicon,
    config: &ElaborationConfig,
) -> Result<ElaborationRecord, BackendError> {
    let seed = config.record_seed(&item.id, strategy);
    match strategy {
        Strategy::None => Ok(ElaborationRecord::empty(&item.id)),
        Strategy::Free => elaborate_free(item, backend, config.free.with_seed(seed), lexicon),
        Strategy::FewshotIc => elaborate_fewshot(item, FewshotVariant::Ic, backend, config.fewshot.with_seed(seed), lexicon),
        Strategy::FewshotPc => elaborate_fewshot(item, FewshotVariant::Pc, backend, config.fewshot.with_seed(seed), lexicon),
        Strategy::FewshotPcic => {
            elaborate_fewshot(item, FewshotVariant::Pcic, backend, config.fewshot.with_seed(seed), lexicon)
        }
        Strategy::Structured => elaborate_structured(item, backend, config.structured.with_seed(seed), lexicon),
        Strategy::Recursive => elaborate_recursive(item, backend, config.recursive.with_seed(seed), lexicon),
        Strategy::BaselineAnswers => Ok(synthetic_expansion(item, SyntheticKind::BaselineAnswers, seed, lexicon)),
        Strategy::BaselineContext => Ok(synthetic_expansion(item, SyntheticKind::BaselineContext, seed, lexicon)),
        Strategy::OracleIntermediary => Ok(synthetic_expansion(item, SyntheticKind::OracleIntermediary, seed, lexicon)),
        Strategy::OracleFinal => Ok(synthetic_expansion(item, SyntheticKind::OracleFinal, seed, lexicon)),
    }
}
