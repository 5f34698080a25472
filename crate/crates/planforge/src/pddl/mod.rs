//! STRIPS-subset PDDL: typed domains and problems, parsing, and canonical
//! rendering.

mod parser;
mod render;
mod types;

pub use parser::{parse_domain, parse_problem};
pub use render::{render_domain, render_problem};
pub use types::{
    ActionSchema, AtomTemplate, Domain, GroundAtom, Param, PredicateSchema, Problem, State,
    TemplateArg, TypeTree, OBJECT_TYPE,
};

use thiserror::Error;

/// Parse and semantic diagnostics for the supported PDDL subset.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PddlError {
    #[error("syntax error at {line}:{col}: expected {expected}, found {found}")]
    Syntax { line: usize, col: usize, expected: String, found: String },
    #[error("unsupported construct `{name}` at {line}:{col}")]
    Unsupported { name: String, line: usize, col: usize },
    #[error("predicate `{predicate}` expects {expected} argument(s), got {got}")]
    ArityMismatch { predicate: String, expected: usize, got: usize },
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("object `{object}` has type `{actual}`, expected `{expected}`")]
    TypeMismatch { object: String, expected: String, actual: String },
    #[error("duplicate {kind} `{name}`")]
    Duplicate { kind: String, name: String },
    #[error("variable `?{0}` is not declared in :parameters")]
    UnboundVariable(String),
    #[error("action `{action}`: atom {atom} appears in both add and delete effects")]
    EffectOverlap { action: String, atom: String },
}
