//! Rendering and parsing of the two controlled-English templates:
//!
//! * `<Name> is [not] <predicate>.`
//! * `If someone is [not] <predicate>, then they are [not] <predicate>.`
//!
//! plus sentence segmentation for generated text.

use std::fmt;

use serde::Serialize;

use crate::lexicon::{Lexicon, Predicate};
use crate::logic::{classify_statement, FormalProblem, Literal, Property, Relation, Rule, Statement};
use crate::text::{tokenize, Token};

pub fn render_literal(lit: &Literal) -> String {
    format!("{} {}.", lit.subject, lit.property.phrase())
}

pub fn render_rule(rule: &Rule) -> String {
    let neg = |p: &Property| if p.affirmed { "" } else { "not " };
    format!(
        "If someone is {}{}, then they are {}{}.",
        neg(&rule.antecedent),
        rule.antecedent.predicate,
        neg(&rule.consequent),
        rule.consequent.predicate
    )
}

pub fn render_statement(stmt: &Statement) -> String {
    match stmt {
        Statement::Literal(l) => render_literal(l),
        Statement::Rule(r) => render_rule(r),
    }
}

/// Joins rendered statements with single spaces.
pub fn render_all<'a>(stmts: impl IntoIterator<Item = &'a Statement>) -> String {
    stmts.into_iter().map(render_statement).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ParseFailure {
    UnknownTemplate,
    UnknownPredicate(String),
    UnknownSubject(String),
}

impl fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseFailure::UnknownTemplate => f.write_str("unknown template"),
            ParseFailure::UnknownPredicate(p) => write!(f, "unknown predicate {p:?}"),
            ParseFailure::UnknownSubject(s) => write!(f, "unknown subject {s:?}"),
        }
    }
}

impl std::error::Error for ParseFailure {}

/// Parses a rendered sentence back into a statement. Matching is case-insensitive;
/// the trailing terminal punctuation is optional.
pub fn parse_statement(sentence: &str, lexicon: &Lexicon) -> Result<Statement, ParseFailure> {
    let mut toks = tokenize(sentence.trim());
    while matches!(toks.last(), Some(Token::Punct('.' | '!' | '?'))) {
        toks.pop();
    }
    let words: Option<Vec<&str>> = toks.iter().map(Token::as_word).collect();

    if toks.first().and_then(Token::as_word) == Some("if") {
        let comma = toks.iter().position(|t| *t == Token::Punct(','));
        let (head, tail) = match comma {
            Some(i) => (&toks[..i], &toks[i + 1..]),
            None => return Err(ParseFailure::UnknownTemplate),
        };
        let head = all_words(head)?;
        let tail = all_words(tail)?;
        let ante = head.strip_prefix(&["if", "someone", "is"][..]).ok_or(ParseFailure::UnknownTemplate)?;
        let cons = tail.strip_prefix(&["then", "they", "are"][..]).ok_or(ParseFailure::UnknownTemplate)?;
        let antecedent = parse_property(ante, lexicon)?;
        let consequent = parse_property(cons, lexicon)?;
        return Ok(Statement::Rule(Rule::new(antecedent, consequent)));
    }

    let words = words.ok_or(ParseFailure::UnknownTemplate)?;
    let is_at = words.iter().position(|w| *w == "is").ok_or(ParseFailure::UnknownTemplate)?;
    if is_at == 0 {
        return Err(ParseFailure::UnknownTemplate);
    }
    let name = words[..is_at].join(" ");
    let subject = lexicon
        .find_name(&name)
        .ok_or_else(|| ParseFailure::UnknownSubject(name.clone()))?;
    let property = parse_property(&words[is_at + 1..], lexicon)?;
    Ok(Statement::Literal(Literal::new(subject, property)))
}

fn all_words(toks: &[Token]) -> Result<Vec<&str>, ParseFailure> {
    toks.iter().map(|t| t.as_word().ok_or(ParseFailure::UnknownTemplate)).collect()
}

fn parse_property(words: &[&str], lexicon: &Lexicon) -> Result<Property, ParseFailure> {
    let (affirmed, rest) = match words.split_first() {
        Some((&"not", rest)) => (false, rest),
        Some(_) => (true, words),
        None => return Err(ParseFailure::UnknownTemplate),
    };
    if rest.is_empty() {
        return Err(ParseFailure::UnknownTemplate);
    }
    match_predicate(rest, lexicon)
        .map(|p| Property { predicate: p.clone(), affirmed })
        .ok_or_else(|| ParseFailure::UnknownPredicate(rest.join(" ")))
}

fn match_predicate<'l>(words: &[&str], lexicon: &'l Lexicon) -> Option<&'l Predicate> {
    lexicon
        .predicates_longest_first()
        .iter()
        .find(|(_, toks)| toks.len() == words.len() && toks.iter().zip(words).all(|(a, b)| a == b))
        .map(|(p, _)| p)
}

const ABBREVIATIONS: &[&str] = &["e.g", "i.e", "mr", "mrs", "ms", "dr", "vs", "cf", "st", "prof"];

fn is_quote(c: char) -> bool {
    matches!(c, '"' | '\u{201c}' | '\u{201d}')
}

/// The first `n` sentences of `text`, split after `.`, `!` or `?` followed by
/// whitespace or end of text. Terminal punctuation inside an open quotation does
/// not end a sentence; a closing quotation right after it is kept with the
/// sentence. Common abbreviations (`e.g.`, `Mr.`) are not boundaries.
pub fn split_sentences(text: &str, n: usize) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut start = 0;
    let mut in_quote = false;
    let mut i = 0;
    while i < chars.len() && out.len() < n {
        let c = chars[i];
        if is_quote(c) {
            in_quote = !in_quote;
            i += 1;
            continue;
        }
        if !matches!(c, '.' | '!' | '?') {
            i += 1;
            continue;
        }
        let mut end = i + 1;
        while end < chars.len() && matches!(chars[end], '.' | '!' | '?') {
            end += 1;
        }
        let mut closed_here = false;
        if in_quote && end < chars.len() && is_quote(chars[end]) {
            end += 1;
            closed_here = true;
        }
        let at_break = end >= chars.len() || chars[end].is_whitespace();
        let inside = in_quote && !closed_here;
        if at_break && !inside && !(c == '.' && end == i + 1 && is_abbreviation(&chars[start..i])) {
            if closed_here {
                in_quote = false;
            }
            let s: String = chars[start..end].iter().collect();
            let s = s.trim();
            if !s.is_empty() {
                out.push(s.to_owned());
            }
            start = end;
        } else if closed_here {
            in_quote = false;
        }
        i = end;
    }
    if out.len() < n {
        let rest: String = chars[start.min(chars.len())..].iter().collect();
        let rest = rest.trim();
        if !rest.is_empty() {
            out.push(rest.to_owned());
        }
    }
    out
}

fn is_abbreviation(before: &[char]) -> bool {
    let word: String = before
        .iter()
        .rev()
        .take_while(|c| !c.is_whitespace())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    let word = word.trim_start_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
    ABBREVIATIONS.contains(&word.as_str())
}

const DISCOURSE_MARKERS: &[&str] = &[
    "therefore, we may conclude that",
    "well, it says that",
    "it follows that",
    "and therefore,",
    "therefore,",
    "and so,",
    "so,",
    "thus,",
    "hence,",
];

/// Removes a leading connective such as `Therefore,` or `It follows that`.
pub fn strip_discourse_marker(sentence: &str) -> &str {
    let trimmed = sentence.trim_start();
    let lower = trimmed.to_lowercase();
    for marker in DISCOURSE_MARKERS {
        if lower.starts_with(marker) && trimmed.is_char_boundary(marker.len()) {
            return trimmed[marker.len()..].trim_start();
        }
    }
    trimmed
}

/// Relation of one generated sentence to the problem, plus whether it parsed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SentenceClass {
    pub relation: Relation,
    pub parsed: bool,
}

/// Parses `sentence` (after stripping a discourse marker) and classifies it.
/// Unparseable sentences are independent.
pub fn classify_sentence(sentence: &str, problem: &FormalProblem, lexicon: &Lexicon) -> SentenceClass {
    match parse_statement(strip_discourse_marker(sentence), lexicon) {
        Ok(stmt) => SentenceClass { relation: classify_statement(&stmt, problem, lexicon), parsed: true },
        Err(_) => SentenceClass { relation: Relation::Independent, parsed: false },
    }
}
