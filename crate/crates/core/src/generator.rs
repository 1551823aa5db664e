//! Balanced sampling of ChainRuler problems over a depth × breadth × contraposition grid.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{Lexicon, Predicate};
use crate::logic::{is_contradictory, transpose, FormalProblem, Literal, Property, Rule, Statement};
use crate::text::mix_seed;
use crate::TaskItem;

const MAX_RESAMPLES: usize = 100;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenerationError {
    #[error("lexicon exhausted: need {needed} {what}, only {available} available")]
    LexiconExhausted { what: &'static str, needed: usize, available: usize },
    #[error("predicate {0:?} has no registered complement")]
    MissingComplement(String),
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("invalid generation spec: {0}")]
    InvalidSpec(String),
    #[error("no consistent problem after {0} attempts")]
    Inconsistent(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContrapositionMode {
    OnlyTrue,
    OnlyFalse,
    Both,
}

impl ContrapositionMode {
    pub fn flags(self) -> &'static [bool] {
        match self {
            ContrapositionMode::OnlyTrue => &[true],
            ContrapositionMode::OnlyFalse => &[false],
            ContrapositionMode::Both => &[false, true],
        }
    }
}

impl std::str::FromStr for ContrapositionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "only-true" | "true" => Ok(ContrapositionMode::OnlyTrue),
            "only-false" | "false" => Ok(ContrapositionMode::OnlyFalse),
            "both" => Ok(ContrapositionMode::Both),
            other => Err(format!("expected only-true, only-false or both, got {other:?}")),
        }
    }
}

/// Bernoulli rates for negating the fact, the conclusion and each intermediary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegationRates {
    pub fact: f64,
    pub conclusion: f64,
    pub intermediary: f64,
}

impl Default for NegationRates {
    fn default() -> Self {
        NegationRates { fact: 0.5, conclusion: 0.5, intermediary: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSpec {
    pub depth: RangeInclusive<usize>,
    pub breadth: RangeInclusive<usize>,
    pub contraposition: ContrapositionMode,
    pub items_per_cell: usize,
    pub seed: u64,
    pub rates: NegationRates,
}

impl Default for GenerationSpec {
    fn default() -> Self {
        GenerationSpec {
            depth: 1..=5,
            breadth: 0..=5,
            contraposition: ContrapositionMode::Both,
            items_per_cell: 10,
            seed: 0,
            rates: NegationRates::default(),
        }
    }
}

impl GenerationSpec {
    pub fn validate(&self) -> Result<(), GenerationError> {
        if self.depth.is_empty() || self.breadth.is_empty() {
            return Err(GenerationError::InvalidSpec("empty depth or breadth range".into()));
        }
        if *self.depth.start() == 0 {
            return Err(GenerationError::ZeroDepth);
        }
        let r = self.rates;
        for (name, v) in [("fact", r.fact), ("conclusion", r.conclusion), ("intermediary", r.intermediary)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(GenerationError::InvalidSpec(format!("{name} negation rate {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Grid cells in emission order: depth, then breadth, then contraposition.
    pub fn cells(&self) -> Vec<(usize, usize, bool)> {
        let mut out = Vec::new();
        for d in self.depth.clone() {
            for b in self.breadth.clone() {
                for &c in self.contraposition.flags() {
                    out.push((d, b, c));
                }
            }
        }
        out
    }
}

/// Conclusion, its logical negation, and its conceptual contradiction
/// (`a is G` → `a is Ḡ`; `a is not G` → `a is not Ḡ`).
pub fn build_answer_set(conclusion: &Literal, lexicon: &Lexicon) -> Result<[Literal; 3], GenerationError> {
    let complement = conclusion
        .property
        .complement(lexicon)
        .ok_or_else(|| GenerationError::MissingComplement(conclusion.predicate().surface().to_owned()))?;
    Ok([
        conclusion.clone(),
        conclusion.negated(),
        Literal::new(conclusion.subject.clone(), complement),
    ])
}

/// Draws `n` distinct predicates from `pool`, never picking two members of a
/// complement pair.
fn draw_predicates<R: Rng + ?Sized>(
    pool: &[Predicate],
    n: usize,
    lexicon: &Lexicon,
    rng: &mut R,
    what: &'static str,
) -> Result<Vec<Predicate>, GenerationError> {
    let mut shuffled = pool.to_vec();
    shuffled.shuffle(rng);
    let mut picked: Vec<Predicate> = Vec::with_capacity(n);
    for p in shuffled {
        if picked.len() == n {
            break;
        }
        if let Some(c) = lexicon.complement(&p) {
            if picked.contains(c) {
                continue;
            }
        }
        picked.push(p);
    }
    if picked.len() < n {
        return Err(GenerationError::LexiconExhausted { what, needed: n, available: picked.len() });
    }
    Ok(picked)
}

/// Samples one formal problem of the given shape.
pub fn sample_problem<R: Rng + ?Sized>(
    depth: usize,
    breadth: usize,
    contraposition: bool,
    lexicon: &Lexicon,
    rates: &NegationRates,
    rng: &mut R,
) -> Result<FormalProblem, GenerationError> {
    if depth == 0 {
        return Err(GenerationError::ZeroDepth);
    }
    for _ in 0..MAX_RESAMPLES {
        let problem = sample_once(depth, breadth, contraposition, lexicon, rates, rng)?;
        let props: Vec<Property> = problem.closure(lexicon).into_iter().map(|l| l.property).collect();
        if !is_contradictory(&props) {
            return Ok(problem);
        }
    }
    Err(GenerationError::Inconsistent(MAX_RESAMPLES))
}

fn sample_once<R: Rng + ?Sized>(
    depth: usize,
    breadth: usize,
    contraposition: bool,
    lexicon: &Lexicon,
    rates: &NegationRates,
    rng: &mut R,
) -> Result<FormalProblem, GenerationError> {
    let (a, b) = lexicon.pairs().choose(rng).expect("lexicon has pairs").clone();
    let (target, complement) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };

    let pool: Vec<Predicate> =
        lexicon.predicates().filter(|p| **p != target && **p != complement).cloned().collect();
    let mut drawn = draw_predicates(&pool, depth + breadth, lexicon, rng, "distinct predicates")?;
    let antecedents = drawn.split_off(depth);
    let chain_preds = drawn;

    let subject = lexicon.names().choose(rng).expect("lexicon has names").clone();

    let mut props: Vec<Property> = Vec::with_capacity(depth + 1);
    props.push(Property::new(chain_preds[0].clone(), !rng.gen_bool(rates.fact)));
    for p in &chain_preds[1..] {
        props.push(Property::new(p.clone(), !rng.gen_bool(rates.intermediary)));
    }
    let goal = Property::new(target.clone(), !rng.gen_bool(rates.conclusion));
    props.push(goal.clone());

    let mut chain: Vec<Rule> = props.windows(2).map(|w| Rule::new(w[0].clone(), w[1].clone())).collect();
    if contraposition {
        let last = chain.pop().expect("depth >= 1");
        chain.push(transpose(&last));
    }

    let targets = [
        Property::affirmed(target.clone()),
        Property::denied(target.clone()),
        Property::affirmed(complement.clone()),
        Property::denied(complement.clone()),
    ];
    let distractors = antecedents
        .into_iter()
        .map(|h| Rule::new(Property::affirmed(h), targets.choose(rng).expect("non-empty").clone()))
        .collect();

    let fact = Literal::new(subject.clone(), props[0].clone());
    let conclusion = Literal::new(subject, goal);
    let [_, alt1, alt2] = build_answer_set(&conclusion, lexicon)?;
    Ok(FormalProblem {
        fact,
        chain,
        distractors,
        conclusion,
        alternatives: [alt1, alt2],
        contraposition,
        scrambled: false,
    })
}

/// A uniformly random permutation of the fact, the chain and the distractors.
pub fn compose_context<R: Rng + ?Sized>(problem: &FormalProblem, rng: &mut R) -> Vec<Statement> {
    let mut stmts = problem.statements();
    stmts.shuffle(rng);
    stmts
}

/// `items_per_cell` items for every grid cell, in cell order. Each cell samples
/// from its own seed so cells can be generated in parallel.
pub fn generate_dataset(spec: &GenerationSpec, lexicon: &Lexicon) -> Result<Vec<TaskItem>, GenerationError> {
    spec.validate()?;
    let cells = spec.cells();
    let per_cell: Vec<Vec<(FormalProblem, Vec<Statement>)>> = cells
        .par_iter()
        .enumerate()
        .map(|(idx, &(depth, breadth, contraposition))| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, idx as u64));
            (0..spec.items_per_cell)
                .map(|_| {
                    let problem = sample_problem(depth, breadth, contraposition, lexicon, &spec.rates, &mut rng)?;
                    let context = compose_context(&problem, &mut rng);
                    Ok((problem, context))
                })
                .collect::<Result<Vec<_>, GenerationError>>()
        })
        .collect::<Result<_, _>>()?;

    Ok(per_cell
        .into_iter()
        .flatten()
        .enumerate()
        .map(|(i, (problem, context))| TaskItem { id: format!("cr-{i:06}"), problem, context })
        .collect())
}

/// Replaces every rule antecedent with a predicate unused anywhere in the problem,
/// keeping its polarity. Consequents, fact and answers are unchanged.
pub fn scramble_antecedents<R: Rng + ?Sized>(
    problem: &FormalProblem,
    lexicon: &Lexicon,
    rng: &mut R,
) -> Result<FormalProblem, GenerationError> {
    let mut used: BTreeSet<Predicate> = BTreeSet::new();
    let mut mention = |p: &Predicate| {
        used.insert(p.clone());
        if let Some(c) = lexicon.complement(p) {
            used.insert(c.clone());
        }
    };
    mention(problem.fact.predicate());
    mention(problem.conclusion.predicate());
    for alt in &problem.alternatives {
        mention(alt.predicate());
    }
    for r in problem.rules() {
        mention(&r.antecedent.predicate);
        mention(&r.consequent.predicate);
    }
    let pool: Vec<Predicate> = lexicon.predicates().filter(|p| !used.contains(*p)).cloned().collect();
    let n = problem.depth() + problem.breadth();
    let fresh = draw_predicates(&pool, n, lexicon, rng, "unused predicates for scrambling")?;

    let mut fresh = fresh.into_iter();
    let mut replace = |r: &Rule| {
        let p = fresh.next().expect("drew one per rule");
        Rule::new(Property::new(p, r.antecedent.affirmed), r.consequent.clone())
    };
    let chain = problem.chain.iter().map(&mut replace).collect();
    let distractors = problem.distractors.iter().map(&mut replace).collect();
    Ok(FormalProblem { chain, distractors, scrambled: true, ..problem.clone() })
}

/// Scrambles an item, keeping each rule at its position in the context.
pub fn scramble_item<R: Rng + ?Sized>(item: &TaskItem, lexicon: &Lexicon, rng: &mut R) -> Result<TaskItem, GenerationError> {
    let problem = scramble_antecedents(&item.problem, lexicon, rng)?;
    let old: Vec<&Rule> = item.problem.rules().collect();
    let new: Vec<&Rule> = problem.rules().collect();
    let context = item
        .context
        .iter()
        .map(|s| match s {
            Statement::Rule(r) => {
                let i = old.iter().position(|o| *o == r).expect("context rule belongs to problem");
                Statement::Rule(new[i].clone())
            }
            lit => lit.clone(),
        })
        .collect();
    Ok(TaskItem { id: item.id.clone(), problem, context })
}

/// Scrambles a whole dataset with per-item seeds derived from `seed`.
pub fn scramble_dataset(items: &[TaskItem], lexicon: &Lexicon, seed: u64) -> Result<Vec<TaskItem>, GenerationError> {
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed ^ 0x5c2a_4b1e, i as u64));
            scramble_item(item, lexicon, &mut rng)
        })
        .collect()
}
