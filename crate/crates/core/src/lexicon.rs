//! Names, complementary predicate pairs and free predicates.
//!
//! The on-disk format is a small sectioned text file:
//!
//! ```text
//! [names]
//! Jill
//! [pairs]
//! guilty | innocent
//! [predicates]
//! in need of money
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const BUILTIN: &str = include_str!("../resources/lexicon.txt");

/// Surface form of a (possibly multiword) predicate, e.g. `in need of money`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Predicate(String);

impl Predicate {
    pub fn new(surface: impl Into<String>) -> Self {
        Predicate(surface.into())
    }

    pub fn surface(&self) -> &str {
        &self.0
    }

    /// Lowercased word tokens of the surface.
    pub fn tokens(&self) -> Vec<String> {
        crate::text::words(&self.0)
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Predicate {
    fn from(s: &str) -> Self {
        Predicate::new(s)
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("duplicate surface {0:?}")]
    Duplicate(String),
    #[error("invalid surface {surface:?}: {reason}")]
    InvalidSurface { surface: String, reason: &'static str },
    #[error("predicate {inner:?} occurs inside predicate {outer:?}")]
    Overlap { inner: String, outer: String },
    #[error("lexicon has no {0}")]
    Empty(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    names: Vec<String>,
    pairs: Vec<(Predicate, Predicate)>,
    free_predicates: Vec<Predicate>,
    complements: BTreeMap<Predicate, Predicate>,
    /// All predicates with their tokens, longest token sequence first (for greedy matching).
    by_length: Vec<(Predicate, Vec<String>)>,
}

impl Lexicon {
    pub fn new(
        names: Vec<String>,
        pairs: Vec<(Predicate, Predicate)>,
        free_predicates: Vec<Predicate>,
    ) -> Result<Self, LexiconError> {
        if names.is_empty() {
            return Err(LexiconError::Empty("names"));
        }
        if pairs.is_empty() {
            return Err(LexiconError::Empty("predicate pairs"));
        }

        let mut seen = BTreeSet::new();
        for name in &names {
            check_surface(name)?;
            if !seen.insert(name.to_lowercase()) {
                return Err(LexiconError::Duplicate(name.clone()));
            }
        }

        let mut complements = BTreeMap::new();
        let mut all = Vec::new();
        for (a, b) in &pairs {
            complements.insert(a.clone(), b.clone());
            complements.insert(b.clone(), a.clone());
            all.push(a.clone());
            all.push(b.clone());
        }
        all.extend(free_predicates.iter().cloned());

        let mut seen_pred = BTreeSet::new();
        for p in &all {
            check_surface(p.surface())?;
            if p.tokens().first().map(String::as_str) == Some("not") {
                return Err(LexiconError::InvalidSurface {
                    surface: p.surface().to_owned(),
                    reason: "predicates may not start with \"not\"",
                });
            }
            if !seen_pred.insert(p.tokens()) {
                return Err(LexiconError::Duplicate(p.surface().to_owned()));
            }
        }

        // Counting and parsing match token sequences, so no predicate may hide inside another.
        let token_seqs: Vec<(Vec<String>, &Predicate)> = all.iter().map(|p| (p.tokens(), p)).collect();
        for (inner, ip) in &token_seqs {
            for (outer, op) in &token_seqs {
                if inner.len() < outer.len() && outer.windows(inner.len()).any(|w| w == inner.as_slice()) {
                    return Err(LexiconError::Overlap {
                        inner: ip.surface().to_owned(),
                        outer: op.surface().to_owned(),
                    });
                }
            }
        }

        let mut by_length: Vec<(Predicate, Vec<String>)> = all.into_iter().map(|p| {
            let t = p.tokens();
            (p, t)
        }).collect();
        by_length.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then_with(|| a.0.cmp(&b.0)));

        Ok(Lexicon { names, pairs, free_predicates, complements, by_length })
    }

    /// The lexicon shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("builtin lexicon is valid")
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        #[derive(Clone, Copy)]
        enum Section {
            None,
            Names,
            Pairs,
            Predicates,
        }
        let mut section = Section::None;
        let mut names = Vec::new();
        let mut pairs = Vec::new();
        let mut free = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = idx + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = match &line[1..line.len() - 1] {
                    "names" => Section::Names,
                    "pairs" => Section::Pairs,
                    "predicates" => Section::Predicates,
                    other => {
                        return Err(LexiconError::Syntax {
                            line: lineno,
                            message: format!("unknown section [{other}]"),
                        })
                    }
                };
                continue;
            }
            match section {
                Section::None => {
                    return Err(LexiconError::Syntax {
                        line: lineno,
                        message: "entry before any section header".into(),
                    })
                }
                Section::Names => names.push(line.to_owned()),
                Section::Predicates => free.push(Predicate::new(line)),
                Section::Pairs => {
                    let mut parts = line.split('|').map(str::trim);
                    match (parts.next(), parts.next(), parts.next()) {
                        (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => {
                            pairs.push((Predicate::new(a), Predicate::new(b)))
                        }
                        _ => {
                            return Err(LexiconError::Syntax {
                                line: lineno,
                                message: "expected \"a | b\"".into(),
                            })
                        }
                    }
                }
            }
        }
        Self::new(names, pairs, free)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn pairs(&self) -> &[(Predicate, Predicate)] {
        &self.pairs
    }

    pub fn free_predicates(&self) -> &[Predicate] {
        &self.free_predicates
    }

    /// Every predicate: pair members first, then free predicates.
    pub fn predicates(&self) -> impl Iterator<Item = &Predicate> {
        self.pairs.iter().flat_map(|(a, b)| [a, b]).chain(self.free_predicates.iter())
    }

    /// Predicates with their lowercased tokens, ordered by descending token length.
    pub fn predicates_longest_first(&self) -> &[(Predicate, Vec<String>)] {
        &self.by_length
    }

    pub fn complement(&self, p: &Predicate) -> Option<&Predicate> {
        self.complements.get(p)
    }

    /// Case-insensitive lookup of a predicate surface.
    pub fn find_predicate(&self, surface: &str) -> Option<&Predicate> {
        let toks = crate::text::words(surface);
        self.by_length.iter().find(|(_, t)| *t == toks).map(|(p, _)| p)
    }

    /// Case-insensitive lookup of a subject name, returning its canonical spelling.
    pub fn find_name(&self, name: &str) -> Option<&str> {
        self.names.iter().find(|n| n.eq_ignore_ascii_case(name)).map(String::as_str)
    }
}

fn check_surface(s: &str) -> Result<(), LexiconError> {
    if s.trim().is_empty() {
        return Err(LexiconError::InvalidSurface { surface: s.to_owned(), reason: "empty" });
    }
    if s.chars().any(|c| matches!(c, '.' | '!' | '?' | ',' | ';' | ':' | '"' | '|')) {
        return Err(LexiconError::InvalidSurface {
            surface: s.to_owned(),
            reason: "contains punctuation",
        });
    }
    Ok(())
}
