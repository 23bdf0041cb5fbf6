//! Complex alignment rules: model, grammar and reference files.

mod model;
mod parse;
mod reference;

pub use model::{conjunctions_isomorphic, AlignmentRule, Atom, Direction, Var, SUBCLASS_OF};
pub use parse::{parse_rule, serialize_rule};
pub use reference::{load_reference, parse_reference, ReferenceAlignment, ReferenceError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("column {column}: {message}")]
    Grammar { column: usize, message: String },
    #[error("column {column}: atom {predicate} has arity {arity}; only 1 or 2 are allowed")]
    Arity { predicate: String, arity: usize, column: usize },
    #[error("{side} side of rule is empty")]
    EmptySide { side: &'static str },
    #[error("invalid variable name '{0}'")]
    InvalidVariable(String),
}
