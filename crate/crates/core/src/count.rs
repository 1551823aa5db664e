//! Token-level occurrence counting of a property in free text.

use crate::logic::Property;
use crate::text::{tokenize, Token};

/// Which predicate slots participate in a count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// Every occurrence in the text.
    Everywhere,
    /// Skips the `if someone is … ,` slot of conditional sentences.
    SkipAntecedents,
}

/// Counts occurrences of the property's predicate whose polarity matches:
/// an occurrence is negated iff the token right before its first word is `not`.
/// Multiword predicates match on the full token sequence.
pub fn count_property(text: &str, property: &Property, scope: Scope) -> usize {
    count_in_tokens(&tokenize(text), &property.predicate.tokens(), property.affirmed, scope)
}

pub(crate) fn count_in_tokens(tokens: &[Token], pred: &[String], affirmed: bool, scope: Scope) -> usize {
    if pred.is_empty() {
        return 0;
    }
    let word = |i: usize| tokens.get(i).and_then(Token::as_word);
    let mut in_antecedent = false;
    let mut count = 0;
    let mut i = 0;
    while i < tokens.len() {
        match &tokens[i] {
            Token::Punct(_) => {
                in_antecedent = false;
                i += 1;
                continue;
            }
            Token::Word(w) if w == "then" => in_antecedent = false,
            Token::Word(w) if w == "if" && word(i + 1) == Some("someone") && word(i + 2) == Some("is") => {
                in_antecedent = true;
                i += 3;
                continue;
            }
            _ => {}
        }
        let hit = pred.iter().enumerate().all(|(k, p)| word(i + k) == Some(p.as_str()));
        if hit {
            let negated = i > 0 && word(i - 1) == Some("not");
            let skip = scope == Scope::SkipAntecedents && in_antecedent;
            if negated != affirmed && !skip {
                count += 1;
            }
            i += pred.len();
        } else {
            i += 1;
        }
    }
    count
}
