//! Symbolic ChainRuler problems and the deduction engine used as ground truth.
//!
//! Every rule is usable in both directions: modus ponens on the antecedent and
//! modus tollens on the negated consequent. Complement pairs from the lexicon are
//! treated as mutually exclusive and jointly exhaustive, so `a is Ḡ` yields
//! `a is not G` and `a is not Ḡ` yields `a is G`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lexicon::{Lexicon, Predicate};

/// A predicate together with a polarity, i.e. `[not] P` without a subject.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Property {
    pub predicate: Predicate,
    pub affirmed: bool,
}

impl Property {
    pub fn new(predicate: impl Into<Predicate>, affirmed: bool) -> Self {
        Property { predicate: predicate.into(), affirmed }
    }

    pub fn affirmed(predicate: impl Into<Predicate>) -> Self {
        Self::new(predicate, true)
    }

    pub fn denied(predicate: impl Into<Predicate>) -> Self {
        Self::new(predicate, false)
    }

    pub fn negated(&self) -> Self {
        Property { predicate: self.predicate.clone(), affirmed: !self.affirmed }
    }

    /// The conceptual contradiction of an affirmed property (`G` → `Ḡ`) or the
    /// conceptual counterpart of a denied one (`not G` → `not Ḡ`).
    pub fn complement(&self, lexicon: &Lexicon) -> Option<Self> {
        lexicon
            .complement(&self.predicate)
            .map(|c| Property { predicate: c.clone(), affirmed: self.affirmed })
    }

    /// `is P` / `is not P`.
    pub fn phrase(&self) -> String {
        if self.affirmed {
            format!("is {}", self.predicate)
        } else {
            format!("is not {}", self.predicate)
        }
    }
}

impl From<Predicate> for Property {
    fn from(predicate: Predicate) -> Self {
        Property { predicate, affirmed: true }
    }
}

/// A singular statement about a named subject.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub subject: String,
    pub property: Property,
}

impl Literal {
    pub fn new(subject: impl Into<String>, property: Property) -> Self {
        Literal { subject: subject.into(), property }
    }

    pub fn negated(&self) -> Self {
        Literal { subject: self.subject.clone(), property: self.property.negated() }
    }

    pub fn predicate(&self) -> &Predicate {
        &self.property.predicate
    }

    pub fn affirmed(&self) -> bool {
        self.property.affirmed
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.subject, self.property.phrase())
    }
}

/// A generalized conditional `if someone is A, then they are B`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rule {
    pub antecedent: Property,
    pub consequent: Property,
}

impl Rule {
    pub fn new(antecedent: Property, consequent: Property) -> Self {
        Rule { antecedent, consequent }
    }

    pub fn is_self_loop(&self) -> bool {
        self.antecedent == self.consequent
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.antecedent.phrase(), self.consequent.phrase())
    }
}

/// Either a singular statement or a rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Statement {
    Literal(Literal),
    Rule(Rule),
}

impl From<Literal> for Statement {
    fn from(l: Literal) -> Self {
        Statement::Literal(l)
    }
}

impl From<Rule> for Statement {
    fn from(r: Rule) -> Self {
        Statement::Rule(r)
    }
}

/// Contrapositive: `A -> B` becomes `not B -> not A`.
pub fn transpose(rule: &Rule) -> Rule {
    Rule { antecedent: rule.consequent.negated(), consequent: rule.antecedent.negated() }
}

/// Why a rule chain could not be followed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainBreak {
    /// Index of the first rule that does not apply.
    pub step: usize,
    pub current: Property,
    pub rule: Rule,
}

impl fmt::Display for ChainBreak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rule {} ({}) applies neither directly nor by contraposition to `{}`",
            self.step,
            self.rule,
            self.current.phrase()
        )
    }
}

/// Follows `chain` from `fact`, returning each derived literal in order, or the
/// first link that does not apply.
pub fn try_derive_chain(fact: &Literal, chain: &[Rule]) -> Result<Vec<Literal>, ChainBreak> {
    let mut current = fact.property.clone();
    let mut out = Vec::with_capacity(chain.len());
    for (step, rule) in chain.iter().enumerate() {
        current = if rule.antecedent == current {
            rule.consequent.clone()
        } else if rule.consequent.negated() == current {
            rule.antecedent.negated()
        } else {
            return Err(ChainBreak { step, current, rule: rule.clone() });
        };
        out.push(Literal::new(fact.subject.clone(), current.clone()));
    }
    Ok(out)
}

/// Intermediary conclusions followed by the final one. An empty result means the
/// chain is empty or broken; the break is logged at debug level.
pub fn derive_chain(fact: &Literal, chain: &[Rule]) -> Vec<Literal> {
    try_derive_chain(fact, chain).unwrap_or_else(|brk| {
        log::debug!("chain not traversable from `{fact}`: {brk}");
        Vec::new()
    })
}

/// Fixed point of `start` under every rule (both directions) and complement bridging.
pub fn saturate(start: &[Property], rules: &[Rule], lexicon: &Lexicon) -> BTreeSet<Property> {
    let mut known: BTreeSet<Property> = start.iter().cloned().collect();
    let mut frontier: Vec<Property> = known.iter().cloned().collect();
    while let Some(p) = frontier.pop() {
        let mut derived = Vec::new();
        if let Some(c) = lexicon.complement(&p.predicate) {
            derived.push(Property { predicate: c.clone(), affirmed: !p.affirmed });
        }
        for rule in rules {
            if rule.antecedent == p {
                derived.push(rule.consequent.clone());
            }
            if rule.consequent.negated() == p {
                derived.push(rule.antecedent.negated());
            }
        }
        for d in derived {
            if known.insert(d.clone()) {
                frontier.push(d);
            }
        }
    }
    known
}

/// Everything that follows about the fact's subject.
pub fn closure(fact: &Literal, rules: &[Rule], lexicon: &Lexicon) -> BTreeSet<Literal> {
    saturate(std::slice::from_ref(&fact.property), rules, lexicon)
        .into_iter()
        .map(|p| Literal::new(fact.subject.clone(), p))
        .collect()
}

/// True if some predicate occurs with both polarities.
pub fn is_contradictory<'a>(props: impl IntoIterator<Item = &'a Property>) -> bool {
    let set: BTreeSet<&Property> = props.into_iter().collect();
    set.iter().any(|p| p.affirmed && set.contains(&p.negated()))
}

/// A symbolic ChainRuler task instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormalProblem {
    pub fact: Literal,
    /// Rule chain in inference order; the last rule is stored transposed when
    /// `contraposition` is set.
    pub chain: Vec<Rule>,
    pub distractors: Vec<Rule>,
    pub conclusion: Literal,
    /// Logical negation first, conceptual contradiction second.
    pub alternatives: [Literal; 2],
    pub contraposition: bool,
    /// Antecedents replaced by unrelated predicates; the conclusion is no longer derivable.
    pub scrambled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvalidProblem {
    #[error("conclusion is not the end of the rule chain")]
    ConclusionNotDerived,
    #[error("alternative {0} does not contradict the conclusion")]
    AlternativeConsistent(usize),
    #[error("distractor {0} has a consequent outside the target set")]
    DistractorOffTarget(usize),
    #[error("rule {0} is a self-loop")]
    SelfLoop(String),
    #[error("closure of the fact is contradictory")]
    Inconsistent,
    #[error("statements mention more than one subject")]
    MixedSubjects,
}

impl FormalProblem {
    pub fn depth(&self) -> usize {
        self.chain.len()
    }

    pub fn breadth(&self) -> usize {
        self.distractors.len()
    }

    pub fn subject(&self) -> &str {
        &self.fact.subject
    }

    /// Chain followed by distractors.
    pub fn rules(&self) -> impl Iterator<Item = &Rule> {
        self.chain.iter().chain(self.distractors.iter())
    }

    pub fn all_rules(&self) -> Vec<Rule> {
        self.rules().cloned().collect()
    }

    /// The fact, the chain and the distractors as statements (unpermuted).
    pub fn statements(&self) -> Vec<Statement> {
        std::iter::once(Statement::Literal(self.fact.clone()))
            .chain(self.rules().cloned().map(Statement::Rule))
            .collect()
    }

    /// Conclusion first, then the two alternatives.
    pub fn answers(&self) -> [Literal; 3] {
        [self.conclusion.clone(), self.alternatives[0].clone(), self.alternatives[1].clone()]
    }

    /// The four admissible distractor consequents `{G, not G, Ḡ, not Ḡ}`.
    pub fn target_consequents(&self, lexicon: &Lexicon) -> Vec<Property> {
        let g = Property::affirmed(self.conclusion.predicate().clone());
        let mut out = vec![g.clone(), g.negated()];
        if let Some(c) = lexicon.complement(&g.predicate) {
            out.push(Property::affirmed(c.clone()));
            out.push(Property::denied(c.clone()));
        }
        out
    }

    pub fn closure(&self, lexicon: &Lexicon) -> BTreeSet<Literal> {
        closure(&self.fact, &self.all_rules(), lexicon)
    }

    /// Checks the structural invariants of a (possibly scrambled) problem.
    pub fn validate(&self, lexicon: &Lexicon) -> Result<(), InvalidProblem> {
        let subject = self.subject();
        if self.conclusion.subject != subject || self.alternatives.iter().any(|a| a.subject != subject) {
            return Err(InvalidProblem::MixedSubjects);
        }
        if let Some(r) = self.rules().find(|r| r.is_self_loop()) {
            return Err(InvalidProblem::SelfLoop(r.to_string()));
        }
        if !self.scrambled && derive_chain(&self.fact, &self.chain).last() != Some(&self.conclusion) {
            return Err(InvalidProblem::ConclusionNotDerived);
        }
        for (i, alt) in self.alternatives.iter().enumerate() {
            let bridged = saturate(&[self.conclusion.property.clone(), alt.property.clone()], &[], lexicon);
            if !is_contradictory(&bridged) {
                return Err(InvalidProblem::AlternativeConsistent(i));
            }
        }
        let targets = self.target_consequents(lexicon);
        if let Some(i) = self.distractors.iter().position(|d| !targets.contains(&d.consequent)) {
            return Err(InvalidProblem::DistractorOffTarget(i));
        }
        let props: Vec<Property> = self.closure(lexicon).into_iter().map(|l| l.property).collect();
        if is_contradictory(&props) {
            return Err(InvalidProblem::Inconsistent);
        }
        Ok(())
    }
}

/// Number of distractors whose consequent (predicate and polarity) differs from
/// the conclusion's.
pub fn effective_distraction(problem: &FormalProblem) -> usize {
    problem
        .distractors
        .iter()
        .filter(|d| d.consequent != problem.conclusion.property)
        .count()
}

/// Logical relation of a statement to a problem's context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Explicit,
    Implicit,
    Inconsistent,
    Independent,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Explicit => "explicit",
            Relation::Implicit => "implicit",
            Relation::Inconsistent => "inconsistent",
            Relation::Independent => "independent",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classifies `stmt` against the context (fact, chain, distractors) of `problem`.
///
/// Literals about another subject are independent. A rule is implicit when its
/// consequent follows from its antecedent under the context rules, and
/// inconsistent when adding it makes the subject's closure contradictory.
pub fn classify_statement(stmt: &Statement, problem: &FormalProblem, lexicon: &Lexicon) -> Relation {
    let rules = problem.all_rules();
    match stmt {
        Statement::Literal(lit) => {
            if lit.subject != problem.subject() {
                return Relation::Independent;
            }
            if *lit == problem.fact {
                return Relation::Explicit;
            }
            let known = saturate(std::slice::from_ref(&problem.fact.property), &rules, lexicon);
            if known.contains(&lit.property) {
                Relation::Implicit
            } else if known.contains(&lit.property.negated()) {
                Relation::Inconsistent
            } else {
                let with = saturate(&[problem.fact.property.clone(), lit.property.clone()], &rules, lexicon);
                if is_contradictory(&with) {
                    Relation::Inconsistent
                } else {
                    Relation::Independent
                }
            }
        }
        Statement::Rule(rule) => {
            if rules.contains(rule) {
                return Relation::Explicit;
            }
            let from_antecedent = saturate(std::slice::from_ref(&rule.antecedent), &rules, lexicon);
            if from_antecedent.contains(&rule.consequent) {
                return Relation::Implicit;
            }
            let mut extended = rules.clone();
            extended.push(rule.clone());
            let with = saturate(std::slice::from_ref(&problem.fact.property), &extended, lexicon);
            if is_contradictory(&with) {
                Relation::Inconsistent
            } else {
                Relation::Independent
            }
        }
    }
}
