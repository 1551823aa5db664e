//! Synthetic multi-hop deduction tasks, elaboration strategies and their evaluation.

pub mod backends;
pub mod cnl;
pub mod count;
pub mod elaborate;
pub mod fixtures;
pub mod generator;
pub mod item;
pub mod lexicon;
pub mod logic;
pub mod metrics;
pub mod pipeline;
pub mod predict;
pub mod text;

pub use item::{ItemRow, RowError, TaskItem};
pub use lexicon::{Lexicon, Predicate};
pub use logic::{FormalProblem, Literal, Property, Relation, Rule, Statement};
