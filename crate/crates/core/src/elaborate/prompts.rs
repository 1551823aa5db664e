use rand::seq::SliceRandom;
use rand::Rng;

use crate::logic::Literal;
use crate::TaskItem;

pub const QUERY_PREFIX: &str = "Here is what we know: ";
pub const PIECEMEAL_LEAD_IN: &str = "Therefore, we may conclude that ";

pub const FEWSHOT_RESOURCE: &str = include_str!("../../resources/fewshot.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FewshotVariant {
    Ic,
    Pc,
    Pcic,
}

impl FewshotVariant {
    fn tag(self) -> &'static str {
        match self {
            FewshotVariant::Ic => "ic",
            FewshotVariant::Pc => "pc",
            FewshotVariant::Pcic => "pcic",
        }
    }
}

/// The two sample solutions of a variant, in prompt order.
pub fn fewshot_samples(variant: FewshotVariant) -> [&'static str; 2] {
    let header = format!("[{}]", variant.tag());
    let mut lines = FEWSHOT_RESOURCE
        .lines()
        .skip_while(|l| l.trim() != header)
        .skip(1)
        .take_while(|l| !l.starts_with('['))
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let first = lines.next().expect("fewshot resource has two samples per variant");
    let second = lines.next().expect("fewshot resource has two samples per variant");
    [first, second]
}

fn question_from(answers: &[Literal]) -> String {
    let (first, rest) = answers.split_first().expect("at least one answer");
    let mut phrases: Vec<String> = vec![first.to_string()];
    phrases.extend(rest.iter().map(|a| a.property.phrase()));
    let body = match phrases.len() {
        1 => phrases.remove(0),
        n => format!("{}, or {}", phrases[..n - 1].join(", "), phrases[n - 1]),
    };
    format!("Does this mean that {body}? Explain!")
}

/// `Does this mean that <S> <a₁>, <a₂>, or <a₃>? Explain!` with the answers in
/// canonical order and the subject named once.
pub fn build_question(item: &TaskItem) -> String {
    question_from(&item.answers())
}

/// As [`build_question`] with the answers in random order.
pub fn build_question_shuffled<R: Rng + ?Sized>(item: &TaskItem, rng: &mut R) -> String {
    let mut answers = item.answers();
    answers.shuffle(rng);
    question_from(&answers)
}

/// `Here is what we know: <context> <question>`.
pub fn query(item: &TaskItem) -> String {
    format!("{QUERY_PREFIX}{} {}", item.context_text(), build_question(item))
}

/// `Here is what we know: <context> Therefore, <subject>`.
pub fn piecemeal_query(context: &str, subject: &str) -> String {
    format!("{QUERY_PREFIX}{context} Therefore, {subject}")
}
