//! The two worked example items, hand-encoded, with contexts in their canonical order.

use crate::logic::{FormalProblem, Literal, Property, Rule, Statement};
use crate::TaskItem;

fn p(pred: &str) -> Property {
    Property::affirmed(pred)
}

fn np(pred: &str) -> Property {
    Property::denied(pred)
}

/// Jill: depth 2, breadth 1, no contraposition.
pub fn jill_example() -> TaskItem {
    let fact = Literal::new("Jill", p("green"));
    let r_green = Rule::new(p("green"), p("loud"));
    let r_loud = Rule::new(p("loud"), p("guilty"));
    let d_empty = Rule::new(p("empty"), p("innocent"));
    let problem = FormalProblem {
        fact: fact.clone(),
        chain: vec![r_green.clone(), r_loud.clone()],
        distractors: vec![d_empty.clone()],
        conclusion: Literal::new("Jill", p("guilty")),
        alternatives: [Literal::new("Jill", np("guilty")), Literal::new("Jill", p("innocent"))],
        contraposition: false,
        scrambled: false,
    };
    let context = vec![
        Statement::Rule(d_empty),
        Statement::Rule(r_green),
        Statement::Rule(r_loud),
        Statement::Literal(fact),
    ];
    TaskItem { id: "example-1".into(), problem, context }
}

/// Lily: depth 3, breadth 2, last chain rule transposed.
pub fn lily_example() -> TaskItem {
    let fact = Literal::new("Lily", p("blue"));
    let r_blue = Rule::new(p("blue"), p("careful"));
    let r_careful = Rule::new(p("careful"), p("loud"));
    let r_generous = Rule::new(np("generous"), np("loud"));
    let d_money = Rule::new(p("in need of money"), np("generous"));
    let d_guilty = Rule::new(p("guilty"), np("generous"));
    let problem = FormalProblem {
        fact: fact.clone(),
        chain: vec![r_blue.clone(), r_careful.clone(), r_generous.clone()],
        distractors: vec![d_money.clone(), d_guilty.clone()],
        conclusion: Literal::new("Lily", p("generous")),
        alternatives: [Literal::new("Lily", np("generous")), Literal::new("Lily", p("stingy"))],
        contraposition: true,
        scrambled: false,
    };
    let context = vec![
        Statement::Rule(r_generous),
        Statement::Rule(r_blue),
        Statement::Literal(fact),
        Statement::Rule(d_money),
        Statement::Rule(d_guilty),
        Statement::Rule(r_careful),
    ];
    TaskItem { id: "example-2".into(), problem, context }
}

pub fn worked_examples() -> Vec<TaskItem> {
    vec![jill_example(), lily_example()]
}
