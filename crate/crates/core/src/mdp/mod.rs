//! Relational MDPs compiled from planning domains, plus the generic
//! simulator interface shared with the tabular oracle models.

mod action;
mod binarize;
mod model;
mod predicate;
mod state;
mod symbols;

use std::fmt::Debug;

use thiserror::Error;

use crate::rng::SimRng;

pub use action::{
    ActionSchema, AtomTemplate, Condition, GroundAction, Outcome, Param, SchemaId, Term, PROBABILITY_TOLERANCE,
};
pub use binarize::{binarize_predicates, Binarization, MAX_TUPLE_OBJECTS};
pub use model::{Domain, RelationalMdp, TypeDecl};
pub use predicate::{derive_goal_schema, PredId, PredKind, PredicateDecl, PredicateTable};
pub use state::{Args, Fact, RelState};
pub use symbols::{ObjId, Universe};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("predicate name clash: {0}")]
    NameClash(String),
    #[error("predicate {0} is not a world predicate")]
    NotAWorldPredicate(String),
    #[error("duplicate object {0}")]
    DuplicateObject(String),
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("unknown predicate {0}")]
    UnknownPredicate(String),
    #[error("arity mismatch: {0}")]
    Arity(String),
    #[error("outcome probabilities of {schema} are invalid (sum {sum})")]
    Probabilities { schema: String, sum: f64 },
    #[error("negative or non-finite cost {cost} on {schema}")]
    NegativeCost { schema: String, cost: f64 },
    #[error("predicate {name} has unsupported arity {arity}")]
    UnsupportedArity { name: String, arity: usize },
    #[error("binarization needs {0} tuple objects, more than the limit")]
    TooManyTuples(usize),
    #[error("schema {0} has an effect on a non-world predicate")]
    NonWorldEffect(String),
    #[error("duplicate action schema {0}")]
    DuplicateSchema(String),
}

/// A generative MDP model.
pub trait Simulator: Sync {
    type State: Clone + Send + Sync + Debug;
    type Action: Clone + Ord + Send + Sync + Debug;

    /// Legal actions in `s`, sorted by the action order.
    fn legal_actions(&self, s: &Self::State) -> Vec<Self::Action>;

    /// Sample a successor and the reward for taking `a` in `s`.
    fn step(&self, s: &Self::State, a: &Self::Action, rng: &mut SimRng) -> (Self::State, f64);

    /// Absorbing zero-reward states.
    fn is_terminal(&self, s: &Self::State) -> bool;
}

/// A (possibly randomized) policy. Returns `None` only when nothing is legal.
pub trait Policy<M: Simulator + ?Sized>: Sync {
    fn choose(&self, mdp: &M, s: &M::State, rng: &mut SimRng) -> Option<M::Action>;
}

/// Draws initial states.
pub trait StateSampler<M: Simulator + ?Sized>: Sync {
    fn sample(&self, mdp: &M, rng: &mut SimRng) -> M::State;
}

/// Uniformly random legal action.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomPolicy;

impl<M: Simulator + ?Sized> Policy<M> for RandomPolicy {
    fn choose(&self, mdp: &M, s: &M::State, rng: &mut SimRng) -> Option<M::Action> {
        use rand::seq::SliceRandom;
        mdp.legal_actions(s).choose(rng).cloned()
    }
}

/// Always the least legal action.
#[derive(Clone, Copy, Debug, Default)]
pub struct LeastActionPolicy;

impl<M: Simulator + ?Sized> Policy<M> for LeastActionPolicy {
    fn choose(&self, mdp: &M, s: &M::State, _rng: &mut SimRng) -> Option<M::Action> {
        mdp.legal_actions(s).into_iter().next()
    }
}

impl<M: Simulator + ?Sized, P: Policy<M> + ?Sized> Policy<M> for &P {
    fn choose(&self, mdp: &M, s: &M::State, rng: &mut SimRng) -> Option<M::Action> {
        (**self).choose(mdp, s, rng)
    }
}

impl<M: Simulator + ?Sized, P: Policy<M> + ?Sized + Send> Policy<M> for Box<P> {
    fn choose(&self, mdp: &M, s: &M::State, rng: &mut SimRng) -> Option<M::Action> {
        (**self).choose(mdp, s, rng)
    }
}

/// A fixed start state.
#[derive(Clone, Debug)]
pub struct FixedState<S>(pub S);

impl<M: Simulator + ?Sized> StateSampler<M> for FixedState<M::State>
where
    M::State: Sync,
{
    fn sample(&self, _mdp: &M, _rng: &mut SimRng) -> M::State {
        self.0.clone()
    }
}
