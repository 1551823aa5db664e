use super::prompts::{build_question, fewshot_samples, piecemeal_query, query, FewshotVariant, PIECEMEAL_LEAD_IN};
use super::{ElaborationRecord, Strategy};
use crate::backends::{Backend, BackendError, DecodingPolicy, GenerationRequest};
use crate::cnl::split_sentences;
use crate::lexicon::Lexicon;
use crate::TaskItem;

const FREE_SENTENCES: usize = 4;
const FEWSHOT_CAP: usize = 5;
const PIECEMEAL_STEPS: usize = 4;

fn with_question(item: &TaskItem, sentences: &[String]) -> String {
    let mut parts = vec![build_question(item)];
    parts.extend(sentences.iter().cloned());
    parts.join(" ")
}

/// One completion of the plain query; its first four sentences.
pub fn elaborate_free(
    item: &TaskItem,
    backend: &dyn Backend,
    policy: DecodingPolicy,
    lexicon: &Lexicon,
) -> Result<ElaborationRecord, BackendError> {
    let prompt = query(item);
    let completion = backend.generate(&GenerationRequest::new(prompt.clone(), policy)?)?;
    let sentences = split_sentences(&completion, FREE_SENTENCES);
    let degenerate = sentences.len() < FREE_SENTENCES;
    let full_text = with_question(item, &sentences);
    Ok(ElaborationRecord::assemble(item, Strategy::Free, prompt, sentences, full_text, Some(policy), degenerate, lexicon))
}

/// Keeps sentences up to and including the first one opening with `Therefore,`
/// (or `And therefore,`), at most five.
pub fn truncate_fewshot(completion: &str) -> Vec<String> {
    let mut out = Vec::new();
    for s in split_sentences(completion, FEWSHOT_CAP) {
        let lower = s.to_lowercase();
        let last = lower.starts_with("therefore,") || lower.starts_with("and therefore,");
        out.push(s);
        if last {
            break;
        }
    }
    out
}

/// Two sample solutions followed by the plain query.
pub fn elaborate_fewshot(
    item: &TaskItem,
    variant: FewshotVariant,
    backend: &dyn Backend,
    policy: DecodingPolicy,
    lexicon: &Lexicon,
) -> Result<ElaborationRecord, BackendError> {
    let [a, b] = fewshot_samples(variant);
    let prompt = format!("{a}\n{b}\n{}", query(item));
    let completion = backend.generate(&GenerationRequest::new(prompt.clone(), policy)?)?;
    let sentences = truncate_fewshot(&completion);
    let degenerate = sentences.is_empty();
    let full_text = with_question(item, &sentences);
    let strategy = match variant {
        FewshotVariant::Ic => Strategy::FewshotIc,
        FewshotVariant::Pc => Strategy::FewshotPc,
        FewshotVariant::Pcic => Strategy::FewshotPcic,
    };
    Ok(ElaborationRecord::assemble(item, strategy, prompt, sentences, full_text, Some(policy), degenerate, lexicon))
}

/// `<subject> <first sentence of completion>`, or `None` for an empty completion.
fn anchored(subject: &str, completion: &str) -> Option<String> {
    let first = split_sentences(completion, 1).into_iter().next()?;
    Some(format!("{subject} {first}"))
}

fn piecemeal_text(sentences: &[String]) -> String {
    if sentences.is_empty() {
        String::new()
    } else {
        format!("{PIECEMEAL_LEAD_IN}{}", sentences.join(" "))
    }
}

/// Four independent completions of the cloze prompt, seeds `s..s+3`.
pub fn elaborate_structured(
    item: &TaskItem,
    backend: &dyn Backend,
    policy: DecodingPolicy,
    lexicon: &Lexicon,
) -> Result<ElaborationRecord, BackendError> {
    let subject = item.subject();
    let prompt = piecemeal_query(&item.context_text(), subject);
    let mut sentences = Vec::new();
    for k in 0..PIECEMEAL_STEPS as u64 {
        let req = GenerationRequest::new(prompt.clone(), policy.with_seed(policy.seed.wrapping_add(k)))?;
        sentences.extend(anchored(subject, &backend.generate(&req)?));
    }
    let degenerate = sentences.len() < PIECEMEAL_STEPS;
    let full_text = piecemeal_text(&sentences);
    Ok(ElaborationRecord::assemble(item, Strategy::Structured, prompt, sentences, full_text, Some(policy), degenerate, lexicon))
}

/// Four sentences, each generated from the context extended by its predecessors.
pub fn elaborate_recursive(
    item: &TaskItem,
    backend: &dyn Backend,
    policy: DecodingPolicy,
    lexicon: &Lexicon,
) -> Result<ElaborationRecord, BackendError> {
    let subject = item.subject();
    let mut context = item.context_text();
    let first_prompt = piecemeal_query(&context, subject);
    let mut sentences = Vec::new();
    for _ in 0..PIECEMEAL_STEPS {
        let req = GenerationRequest::new(piecemeal_query(&context, subject), policy)?;
        if let Some(s) = anchored(subject, &backend.generate(&req)?) {
            context.push(' ');
            context.push_str(&s);
            sentences.push(s);
        }
    }
    let degenerate = sentences.len() < PIECEMEAL_STEPS;
    let full_text = piecemeal_text(&sentences);
    Ok(ElaborationRecord::assemble(item, Strategy::Recursive, first_prompt, sentences, full_text, Some(policy), degenerate, lexicon))
}
