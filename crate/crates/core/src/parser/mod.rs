//! Domain, problem and policy file formats.

mod pddl;
mod policy;
mod sexpr;

use std::fmt;

use thiserror::Error;

pub use pddl::{parse_domain, parse_problem, write_problem, Problem};
pub use policy::{parse_policy, parse_policy_for, render_policy, render_rule, PolicyVocabulary};
pub use sexpr::{parse_sexprs, SExpr};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
#[error("{span}: {message}{}", expected.as_ref().map(|e| format!(" (expected {e})")).unwrap_or_default())]
pub struct ParseError {
    pub message: String,
    pub span: Span,
    pub expected: Option<String>,
}

impl ParseError {
    pub fn new(message: impl Into<String>, span: Span) -> Self {
        ParseError { message: message.into(), span, expected: None }
    }

    pub fn expecting(mut self, what: impl Into<String>) -> Self {
        self.expected = Some(what.into());
        self
    }
}
