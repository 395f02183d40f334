//! Taxonomic class expressions and decision-list policies over them.

mod enumerate;
mod eval;
mod objset;
mod policy;

use thiserror::Error;

use crate::mdp::{PredId, SchemaId};

pub use enumerate::{canonical_relations, count_classes, enumerate_classes, enumerate_literals, DEFAULT_ENUMERATION_CAP};
pub use eval::{interpret_class, interpret_rel, ClassId, ClassNode, ExprArena, Interp, RelId, RelNode, Relation};
pub use objset::ObjSet;
pub use policy::{rule_allows, select_action, DecisionList};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelExpr {
    Prim(PredId),
    Inverse(Box<RelExpr>),
    Star(Box<RelExpr>),
}

impl RelExpr {
    pub fn inverse(self) -> Self {
        RelExpr::Inverse(Box::new(self))
    }

    pub fn star(self) -> Self {
        RelExpr::Star(Box::new(self))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassExpr {
    Prim(PredId),
    /// Action argument, 0-based (`x1` is `Var(0)`).
    Var(usize),
    AThing,
    Not(Box<ClassExpr>),
    Apply(RelExpr, Box<ClassExpr>),
    Min(RelExpr),
}

impl ClassExpr {
    pub fn not(self) -> Self {
        ClassExpr::Not(Box::new(self))
    }

    pub fn apply(rel: RelExpr, inner: ClassExpr) -> Self {
        ClassExpr::Apply(rel, Box::new(inner))
    }

    pub fn depth(&self) -> usize {
        depth(self)
    }

    /// Largest variable index mentioned, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            ClassExpr::Var(i) => Some(*i),
            ClassExpr::Not(c) | ClassExpr::Apply(_, c) => c.max_var(),
            _ => None,
        }
    }
}

pub fn depth(e: &ClassExpr) -> usize {
    match e {
        ClassExpr::Prim(_) | ClassExpr::Var(_) | ClassExpr::AThing | ClassExpr::Min(_) => 1,
        ClassExpr::Not(c) | ClassExpr::Apply(_, c) => depth(c) + 1,
    }
}

/// `x_var ∈ expr`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Literal {
    pub var: usize,
    pub expr: ClassExpr,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub action: SchemaId,
    pub literals: Vec<Literal>,
}

impl Rule {
    pub fn empty(action: SchemaId) -> Self {
        Rule { action, literals: Vec::new() }
    }

    pub fn max_depth(&self) -> usize {
        self.literals.iter().map(|l| depth(&l.expr)).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TaxonomyError {
    #[error("variable x{} is not bound", .0 + 1)]
    UnboundVar(usize),
    #[error("literal enumeration would produce {count} literals, above the cap of {cap}")]
    TooManyLiterals { count: u128, cap: usize },
    #[error("depth must be at least 1")]
    ZeroDepth,
}
