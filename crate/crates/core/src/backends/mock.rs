//! A deterministic stand-in model that answers by predicate frequency: an answer
//! is as likely as its (predicate, polarity) is frequent among the consequents and
//! assertions of the prompt.

use std::collections::BTreeMap;

use super::{Backend, BackendError, GenerationRequest};
use crate::cnl::{parse_statement, split_sentences, strip_discourse_marker};
use crate::count::{count_property, Scope};
use crate::lexicon::Lexicon;
use crate::logic::{Literal, Property, Statement};

/// Additive offset of mock log-probabilities; keeps scores non-positive for any
/// realistic count.
pub const MOCK_SCORE_OFFSET: f64 = -32.0;

const QUERY_MARKER: &str = "Here is what we know:";
const QUESTION_PREFIX: &str = "does this mean that ";
const OPEN_SENTENCES: usize = 4;

#[derive(Debug, Clone)]
pub struct MockBackend {
    lexicon: Lexicon,
}

impl MockBackend {
    pub fn new(lexicon: Lexicon) -> Self {
        MockBackend { lexicon }
    }
}

fn answer_count(prompt: &str, answer: &str, lexicon: &Lexicon) -> usize {
    match parse_statement(strip_discourse_marker(answer), lexicon) {
        Ok(Statement::Literal(l)) => count_property(prompt, &l.property, Scope::SkipAntecedents),
        _ => 0,
    }
}

/// `count + offset`, strictly increasing in the answer's occurrence count.
pub fn mock_score(prompt: &str, continuation: &str, lexicon: &Lexicon) -> f64 {
    answer_count(prompt, continuation, lexicon) as f64 + MOCK_SCORE_OFFSET
}

/// Index of the answer whose (predicate, polarity) occurs most often outside rule
/// antecedents; ties go to the lowest index.
pub fn mock_heuristic_choice(prompt: &str, answers: &[String], lexicon: &Lexicon) -> usize {
    let mut best = (0, 0);
    for (i, a) in answers.iter().enumerate() {
        let c = answer_count(prompt, a, lexicon);
        if i == 0 || c > best.1 {
            best = (i, c);
        }
    }
    best.0
}

/// Answer phrases of a `Does this mean that …?` question, as properties.
fn parse_question(sentence: &str, lexicon: &Lexicon) -> Option<(String, Vec<Property>)> {
    let lower = sentence.trim().to_lowercase();
    let body = lower.strip_prefix(QUESTION_PREFIX)?;
    let body = &body[..body.find('?')?];
    let mut parts = body.split(", or ").flat_map(|s| s.split(", "));
    let first = match parse_statement(parts.next()?, lexicon).ok()? {
        Statement::Literal(l) => l,
        Statement::Rule(_) => return None,
    };
    let mut props = vec![first.property];
    for phrase in parts {
        if let Ok(Statement::Literal(l)) = parse_statement(&format!("{} {phrase}", first.subject), lexicon) {
            props.push(l.property);
        }
    }
    Some((first.subject, props))
}

/// What the mock knows about the segment it continues.
struct Reading {
    subject: Option<String>,
    /// Candidate property → position of its latest mention.
    candidates: BTreeMap<Property, usize>,
    asserted: Vec<Property>,
    answer_order: Vec<Property>,
}

impl Reading {
    fn of(segment: &str, lexicon: &Lexicon) -> Self {
        let mut r = Reading { subject: None, candidates: BTreeMap::new(), asserted: Vec::new(), answer_order: Vec::new() };
        for (pos, sentence) in split_sentences(segment, usize::MAX).iter().enumerate() {
            if let Some((subject, props)) = parse_question(sentence, lexicon) {
                r.subject.get_or_insert(subject);
                r.answer_order = props;
                continue;
            }
            match parse_statement(strip_discourse_marker(sentence), lexicon) {
                Ok(Statement::Rule(rule)) => {
                    r.candidates.insert(rule.consequent, pos);
                }
                Ok(Statement::Literal(l)) => {
                    r.subject.get_or_insert_with(|| l.subject.clone());
                    r.candidates.insert(l.property.clone(), pos);
                    r.asserted.push(l.property);
                }
                Err(_) => {}
            }
        }
        r
    }

    /// Highest count first, then answer order, then most recent mention.
    fn ranked(&self, counts: &BTreeMap<Property, usize>) -> Vec<Property> {
        let order = |p: &Property| self.answer_order.iter().position(|a| a == p).unwrap_or(usize::MAX);
        let mut props: Vec<&Property> = self.candidates.keys().collect();
        props.sort_by(|a, b| {
            counts[*b]
                .cmp(&counts[*a])
                .then(order(a).cmp(&order(b)))
                .then(self.candidates[*b].cmp(&self.candidates[*a]))
        });
        props.into_iter().cloned().collect()
    }

    fn pick(&self, counts: &BTreeMap<Property, usize>) -> Option<Property> {
        let ranked = self.ranked(counts);
        ranked.iter().find(|p| !self.asserted.contains(p)).or(ranked.first()).cloned()
    }
}

/// `Therefore, <Name>` at the end of the prompt, if present.
fn piecemeal_subject<'l>(prompt: &str, lexicon: &'l Lexicon) -> Option<&'l str> {
    let trimmed = prompt.trim_end();
    let idx = trimmed.rfind("Therefore, ")?;
    lexicon.find_name(&trimmed[idx + "Therefore, ".len()..])
}

fn truncate_words(text: &str, budget: usize) -> String {
    let mut out = String::new();
    for (i, w) in text.split(' ').enumerate() {
        if i >= budget {
            break;
        }
        out.push(' ');
        out.push_str(w);
    }
    out
}

impl MockBackend {
    fn continue_prompt(&self, prompt: &str) -> String {
        let segment = prompt.rfind(QUERY_MARKER).map_or(prompt, |i| &prompt[i + QUERY_MARKER.len()..]);
        let piecemeal = piecemeal_subject(prompt, &self.lexicon);
        let body = match piecemeal {
            Some(_) => &segment[..segment.trim_end().rfind("Therefore, ").unwrap_or(segment.len())],
            None => segment,
        };
        let mut reading = Reading::of(body, &self.lexicon);
        let subject = match piecemeal.map(str::to_owned).or_else(|| reading.subject.clone()) {
            Some(s) => s,
            None => return String::new(),
        };
        let mut counts: BTreeMap<Property, usize> =
            reading.candidates.keys().map(|p| (p.clone(), count_property(body, p, Scope::SkipAntecedents))).collect();

        if piecemeal.is_some() {
            return reading.pick(&counts).map(|p| format!(" {}.", p.phrase())).unwrap_or_default();
        }
        let mut sentences = Vec::new();
        for _ in 0..OPEN_SENTENCES {
            let Some(p) = reading.pick(&counts) else { break };
            sentences.push(format!("{}.", Literal::new(subject.clone(), p.clone())));
            *counts.get_mut(&p).expect("candidate") += 1;
            reading.asserted.push(p);
        }
        if let Some(top) = reading.ranked(&counts).first() {
            sentences.push(format!("Therefore, {}.", Literal::new(subject, top.clone())));
        }
        sentences.join(" ")
    }
}

impl Backend for MockBackend {
    fn generate(&self, req: &GenerationRequest) -> Result<String, BackendError> {
        let text = self.continue_prompt(&req.prompt);
        if text.is_empty() {
            return Ok(text);
        }
        let piecemeal = text.starts_with(' ');
        let out = truncate_words(text.trim_start(), req.policy.max_new_tokens);
        Ok(if piecemeal { out } else { out.trim_start().to_owned() })
    }

    fn score_continuation(&self, prompt: &str, continuation: &str) -> Result<f64, BackendError> {
        Ok(mock_score(prompt, continuation, &self.lexicon))
    }
}
