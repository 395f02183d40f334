//! Decision-list learning from Q-labeled training examples.

mod search;

pub use search::{beam_search, learn_decision_list, learn_rule, RuleSearch};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{GroundAction, PredId, PredKind, PredicateTable, RelState, RelationalMdp, SchemaId};
use crate::rollout::TrainingExample;
use crate::taxonomy::{rule_allows, Rule, TaxonomyError, DEFAULT_ENUMERATION_CAP};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    /// Depth bound `d` on class expressions.
    pub max_depth: usize,
    /// Length bound `l` on rule bodies.
    pub max_literals: usize,
    /// Beam width `b`.
    pub beam_width: usize,
    pub coverage_weight: f64,
    pub advantage_weight: f64,
    /// Upper bound on enumerated literals per action type.
    pub enumeration_cap: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            max_depth: 3,
            max_literals: 3,
            beam_width: 5,
            coverage_weight: 1.0,
            advantage_weight: 1.0,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        if self.max_depth == 0 || self.max_literals == 0 || self.beam_width == 0 {
            return Err(LearnError::Config("depth, length and beam width must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("action {0} has no estimate in the example")]
    NotLegal(String),
    #[error("invalid learner configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
}

/// Predicates rules may mention.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    pub unary: Vec<PredId>,
    pub binary: Vec<PredId>,
}

impl Vocabulary {
    /// All unary and binary world predicates, plus goal and comparison
    /// predicates for those named in `goal_preds` (all of them when `None`).
    pub fn new(preds: &PredicateTable, goal_preds: Option<&[String]>) -> Self {
        let keep = |id: PredId| {
            if id.kind == PredKind::World {
                return true;
            }
            let Some(g) = goal_preds else { return true };
            let base = preds.name(id.with_kind(PredKind::World));
            g.iter().any(|n| base == n || base.strip_prefix(n.as_str()).is_some_and(|r| r.starts_with("_arg")))
        };
        Vocabulary {
            unary: preds.with_arity(1).into_iter().filter(|&p| keep(p)).collect(),
            binary: preds.with_arity(2).into_iter().filter(|&p| keep(p)).collect(),
        }
    }

    pub fn for_mdp(mdp: &RelationalMdp, goal_preds: Option<&[String]>) -> Self {
        Vocabulary::new(mdp.policy_predicates(), goal_preds)
    }
}

/// `Δ(s, a) = Q̂(s, a) − Q̂(s, π(s))`.
pub fn q_advantage<S>(ex: &TrainingExample<S, GroundAction>, a: &GroundAction) -> Result<f64, LearnError> {
    let qa = ex.q_of(a).ok_or_else(|| LearnError::NotLegal(format!("{a:?}")))?;
    let prior = ex.prior.as_ref().ok_or_else(|| LearnError::NotLegal("prior".into()))?;
    let qp = ex.q_of(prior).ok_or_else(|| LearnError::NotLegal(format!("{prior:?}")))?;
    Ok(qa - qp)
}

/// An example prepared for learning: the policy view of its state and the
/// advantage of each legal action, in action order.
#[derive(Clone, Debug)]
pub struct LabeledExample {
    pub view: RelState,
    pub actions: Vec<GroundAction>,
    pub advantages: Vec<f64>,
}

/// The flat multiset `D` of labeled examples over one object universe.
#[derive(Clone, Debug)]
pub struct TrainingSet {
    examples: Vec<LabeledExample>,
    objects: usize,
}

impl TrainingSet {
    /// Examples with no estimates, or whose prior action has none, are
    /// dropped.
    pub fn new(mdp: &RelationalMdp, examples: &[TrainingExample<RelState, GroundAction>]) -> Self {
        let mut out = Vec::with_capacity(examples.len());
        for ex in examples {
            if ex.q.is_empty() {
                continue;
            }
            let Some(qp) = ex.prior.as_ref().and_then(|p| ex.q_of(p)) else { continue };
            let mut pairs: Vec<(GroundAction, f64)> = ex.q.iter().map(|(a, v)| (a.clone(), v - qp)).collect();
            pairs.sort_by(|x, y| x.0.cmp(&y.0));
            pairs.dedup_by(|x, y| x.0 == y.0);
            let (actions, advantages) = pairs.into_iter().unzip();
            out.push(LabeledExample { view: mdp.policy_state(&ex.state).into_owned(), actions, advantages });
        }
        TrainingSet { examples: out, objects: mdp.policy_object_count() }
    }

    pub fn from_labeled(examples: Vec<LabeledExample>, objects: usize) -> Self {
        TrainingSet { examples, objects }
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn object_count(&self) -> usize {
        self.objects
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Action types with at least one legal action somewhere in the set.
    pub fn action_types(&self) -> Vec<SchemaId> {
        let mut t: Vec<SchemaId> = self.examples.iter().flat_map(|e| e.actions.iter().map(|a| a.schema)).collect();
        t.sort();
        t.dedup();
        t
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredRule {
    pub rule: Rule,
    pub hvalue: f64,
    pub covered: usize,
}

/// Whether `rule` allows some legal action of `ex`.
pub fn covers(rule: &Rule, ex: &LabeledExample, objects: usize) -> bool {
    ex.actions.iter().any(|a| a.schema == rule.action && rule_allows(rule, &ex.view, objects, a))
}

/// Covered-example count plus cumulative Q-advantage, evaluated directly.
pub fn hvalue(rule: &Rule, d: &TrainingSet, cfg: &LearnerConfig) -> ScoredRule {
    let mut total = 0.0;
    let mut covered = 0;
    for ex in &d.examples {
        let mut adv = 0.0;
        let mut any = false;
        for (a, delta) in ex.actions.iter().zip(&ex.advantages) {
            if a.schema == rule.action && rule_allows(rule, &ex.view, d.objects, a) {
                adv += delta;
                any = true;
            }
        }
        if any {
            covered += 1;
            total += cfg.coverage_weight + cfg.advantage_weight * adv;
        }
    }
    ScoredRule { rule: rule.clone(), hvalue: total, covered }
}
