//! Rendered task items and their JSONL row format.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnl::{parse_statement, render_literal, render_rule, render_statement, ParseFailure};
use crate::lexicon::Lexicon;
use crate::logic::{effective_distraction, FormalProblem, InvalidProblem, Literal, Rule, Statement};

/// A natural-language task instance: a formal problem plus its permuted context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskItem {
    pub id: String,
    pub problem: FormalProblem,
    /// Fact, chain and distractors in presentation order.
    pub context: Vec<Statement>,
}

impl TaskItem {
    pub fn subject(&self) -> &str {
        self.problem.subject()
    }

    /// Conclusion, logical negation, conceptual contradiction.
    pub fn answers(&self) -> [Literal; 3] {
        self.problem.answers()
    }

    pub fn context_sentences(&self) -> Vec<String> {
        self.context.iter().map(render_statement).collect()
    }

    /// Context sentences joined with single spaces.
    pub fn context_text(&self) -> String {
        self.context_sentences().join(" ")
    }

    pub fn depth(&self) -> usize {
        self.problem.depth()
    }

    pub fn breadth(&self) -> usize {
        self.problem.breadth()
    }

    pub fn effective_distraction(&self) -> usize {
        effective_distraction(&self.problem)
    }

    pub fn to_row(&self) -> ItemRow {
        let p = &self.problem;
        ItemRow {
            id: self.id.clone(),
            fact: render_literal(&p.fact),
            rulechain: p.chain.iter().map(render_rule).collect(),
            distractors: p.distractors.iter().map(render_rule).collect(),
            conclusion: render_literal(&p.conclusion),
            alternatives: p.alternatives.iter().map(render_literal).collect(),
            depth: p.depth(),
            breadth: p.breadth(),
            contraposition: p.contraposition,
            effective_distraction: effective_distraction(p),
            subject: p.subject().to_owned(),
            context: self.context_sentences(),
            scrambled: p.scrambled,
        }
    }

    pub fn from_row(row: &ItemRow, lexicon: &Lexicon) -> Result<Self, RowError> {
        let literal = |s: &str| match parse_statement(s, lexicon) {
            Ok(Statement::Literal(l)) => Ok(l),
            Ok(Statement::Rule(_)) => Err(RowError::Kind { sentence: s.to_owned(), expected: "literal" }),
            Err(e) => Err(RowError::Parse { sentence: s.to_owned(), reason: e }),
        };
        let rule = |s: &str| match parse_statement(s, lexicon) {
            Ok(Statement::Rule(r)) => Ok(r),
            Ok(Statement::Literal(_)) => Err(RowError::Kind { sentence: s.to_owned(), expected: "rule" }),
            Err(e) => Err(RowError::Parse { sentence: s.to_owned(), reason: e }),
        };
        if row.alternatives.len() != 2 {
            return Err(RowError::Field("alternatives must have exactly two entries"));
        }
        let problem = FormalProblem {
            fact: literal(&row.fact)?,
            chain: row.rulechain.iter().map(|s| rule(s)).collect::<Result<Vec<Rule>, _>>()?,
            distractors: row.distractors.iter().map(|s| rule(s)).collect::<Result<Vec<Rule>, _>>()?,
            conclusion: literal(&row.conclusion)?,
            alternatives: [literal(&row.alternatives[0])?, literal(&row.alternatives[1])?],
            contraposition: row.contraposition,
            scrambled: row.scrambled,
        };
        let context = row
            .context
            .iter()
            .map(|s| parse_statement(s, lexicon).map_err(|e| RowError::Parse { sentence: s.clone(), reason: e }))
            .collect::<Result<Vec<_>, _>>()?;
        if problem.depth() != row.depth || problem.breadth() != row.breadth {
            return Err(RowError::Field("depth/breadth disagree with rule lists"));
        }
        if effective_distraction(&problem) != row.effective_distraction {
            return Err(RowError::Field("effective_distraction disagrees with distractors"));
        }
        if problem.subject() != row.subject {
            return Err(RowError::Field("subject disagrees with fact"));
        }
        let mut expected = problem.statements();
        let mut got = context.clone();
        expected.sort();
        got.sort();
        if expected != got {
            return Err(RowError::Field("context is not a permutation of fact, chain and distractors"));
        }
        problem.validate(lexicon)?;
        Ok(TaskItem { id: row.id.clone(), problem, context })
    }
}

/// One dataset line; every sentence is stored rendered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemRow {
    pub id: String,
    pub fact: String,
    pub rulechain: Vec<String>,
    pub distractors: Vec<String>,
    pub conclusion: String,
    pub alternatives: Vec<String>,
    pub depth: usize,
    pub breadth: usize,
    pub contraposition: bool,
    pub effective_distraction: usize,
    pub subject: String,
    pub context: Vec<String>,
    pub scrambled: bool,
}

#[derive(Debug, Error)]
pub enum RowError {
    #[error("cannot parse {sentence:?}: {reason}")]
    Parse { sentence: String, reason: ParseFailure },
    #[error("{sentence:?} is not a {expected}")]
    Kind { sentence: String, expected: &'static str },
    #[error("inconsistent row: {0}")]
    Field(&'static str),
    #[error("invalid problem: {0}")]
    Invalid(#[from] InvalidProblem),
}
