use super::{ClassId, ExprArena, Interp, Rule};
use crate::mdp::{GroundAction, Policy, RelState, RelationalMdp, SchemaId, Simulator};
use crate::rng::SimRng;

/// An ordered list of action-selection rules.
#[derive(Clone, Debug)]
pub struct DecisionList {
    rules: Vec<Rule>,
    arena: ExprArena,
    compiled: Vec<(SchemaId, Vec<(usize, ClassId)>)>,
}

impl PartialEq for DecisionList {
    fn eq(&self, other: &Self) -> bool {
        self.rules == other.rules
    }
}

impl Default for DecisionList {
    fn default() -> Self {
        DecisionList::new(Vec::new())
    }
}

impl DecisionList {
    pub fn new(rules: Vec<Rule>) -> Self {
        let mut arena = ExprArena::new();
        let compiled = rules
            .iter()
            .map(|r| (r.action, r.literals.iter().map(|l| (l.var, arena.intern_class(&l.expr))).collect()))
            .collect();
        DecisionList { rules, arena, compiled }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn push(&mut self, rule: Rule) {
        let mut rules = std::mem::take(&mut self.rules);
        rules.push(rule);
        *self = DecisionList::new(rules);
    }

    fn allows(&self, interp: &mut Interp<'_>, idx: usize, a: &GroundAction) -> bool {
        let (schema, lits) = &self.compiled[idx];
        if *schema != a.schema {
            return false;
        }
        lits.iter().all(|&(var, c)| match a.args.get(var) {
            Some(&o) => interp.member(c, &a.args, o).unwrap_or(false),
            None => false,
        })
    }

    /// Index of the first rule allowing some action in `legal`, together with
    /// the least such action.
    pub fn first_firing(&self, view: &RelState, n: usize, legal: &[GroundAction]) -> Option<(usize, GroundAction)> {
        let mut interp = Interp::new(&self.arena, view, n);
        for idx in 0..self.compiled.len() {
            if let Some(a) = legal.iter().find(|a| self.allows(&mut interp, idx, a)) {
                return Some((idx, a.clone()));
            }
        }
        None
    }

    /// The action the list picks among `legal` (sorted), or the least legal
    /// action when no rule fires.
    pub fn choose_among(&self, view: &RelState, n: usize, legal: &[GroundAction]) -> Option<GroundAction> {
        if legal.is_empty() {
            return None;
        }
        match self.first_firing(view, n, legal) {
            Some((_, a)) => Some(a),
            None => Some(legal[0].clone()),
        }
    }
}

/// Whether `rule` allows `a` in the policy view state `view` over `n` objects.
pub fn rule_allows(rule: &Rule, view: &RelState, n: usize, a: &GroundAction) -> bool {
    let list = DecisionList::new(vec![rule.clone()]);
    let mut interp = Interp::new(&list.arena, view, n);
    list.allows(&mut interp, 0, a)
}

/// The policy defined by a decision list: the least legal action allowed by
/// the first rule that allows any legal action, else the least legal action.
pub fn select_action(list: &DecisionList, mdp: &RelationalMdp, s: &RelState) -> Option<GroundAction> {
    let legal = mdp.legal_actions(s);
    if legal.is_empty() {
        return None;
    }
    let view = mdp.policy_state(s);
    list.choose_among(&view, mdp.policy_object_count(), &legal)
}

impl Policy<RelationalMdp> for DecisionList {
    fn choose(&self, mdp: &RelationalMdp, s: &RelState, _rng: &mut SimRng) -> Option<GroundAction> {
        select_action(self, mdp, s)
    }
}
