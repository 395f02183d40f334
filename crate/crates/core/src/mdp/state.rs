use std::sync::Arc;

use smallvec::SmallVec;

use super::{ObjId, PredId, PredKind};

pub type Args = SmallVec<[ObjId; 3]>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub pred: PredId,
    pub args: Args,
}

impl Fact {
    pub fn new(pred: PredId, args: impl IntoIterator<Item = ObjId>) -> Self {
        Fact { pred, args: args.into_iter().collect() }
    }

    pub fn with_kind(&self, kind: PredKind) -> Fact {
        Fact { pred: self.pred.with_kind(kind), args: self.args.clone() }
    }
}

/// An MDP state: one planning problem, i.e. the current world facts plus the
/// goal facts. Both lists are kept sorted and duplicate-free. Goal facts are
/// shared between a state and all of its successors.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RelState {
    world: Vec<Fact>,
    goal: Arc<Vec<Fact>>,
}

fn normalize(mut facts: Vec<Fact>) -> Vec<Fact> {
    facts.sort_unstable();
    facts.dedup();
    facts
}

impl RelState {
    /// Build a state from world facts and goal facts. World facts must use
    /// world predicates and goal facts goal predicates.
    pub fn new(world: impl IntoIterator<Item = Fact>, goal: impl IntoIterator<Item = Fact>) -> Self {
        let world = normalize(world.into_iter().collect());
        let goal = normalize(goal.into_iter().collect());
        debug_assert!(world.iter().all(|f| f.pred.kind == PredKind::World));
        debug_assert!(goal.iter().all(|f| f.pred.kind == PredKind::Goal));
        RelState { world, goal: Arc::new(goal) }
    }

    /// Same goal, new world facts.
    pub fn with_world(&self, world: Vec<Fact>) -> Self {
        RelState { world: normalize(world), goal: Arc::clone(&self.goal) }
    }

    pub fn world(&self) -> &[Fact] {
        &self.world
    }

    pub fn goal(&self) -> &[Fact] {
        &self.goal
    }

    pub fn shares_goal_with(&self, other: &RelState) -> bool {
        Arc::ptr_eq(&self.goal, &other.goal) || self.goal == other.goal
    }

    fn range(facts: &[Fact], index: u32) -> &[Fact] {
        let lo = facts.partition_point(|f| f.pred.index < index);
        let hi = facts.partition_point(|f| f.pred.index <= index);
        &facts[lo..hi]
    }

    /// World facts of the world predicate with this index.
    pub fn world_facts_of(&self, index: u32) -> &[Fact] {
        Self::range(&self.world, index)
    }

    /// Goal facts of the goal predicate with this index.
    pub fn goal_facts_of(&self, index: u32) -> &[Fact] {
        Self::range(&self.goal, index)
    }

    pub fn holds_world(&self, pred_index: u32, args: &[ObjId]) -> bool {
        self.world_facts_of(pred_index).binary_search_by(|f| f.args.as_slice().cmp(args)).is_ok()
    }

    pub fn holds_goal(&self, pred_index: u32, args: &[ObjId]) -> bool {
        self.goal_facts_of(pred_index).binary_search_by(|f| f.args.as_slice().cmp(args)).is_ok()
    }

    /// Whether the fact holds, with comparison facts derived on demand.
    pub fn holds(&self, fact: &Fact) -> bool {
        match fact.pred.kind {
            PredKind::World => self.holds_world(fact.pred.index, &fact.args),
            PredKind::Goal => self.holds_goal(fact.pred.index, &fact.args),
            PredKind::Comparison => {
                self.holds_world(fact.pred.index, &fact.args) && self.holds_goal(fact.pred.index, &fact.args)
            }
        }
    }

    /// `cp(o..)` for every `gp(o..)` goal fact whose world fact `p(o..)` holds.
    pub fn comparison_facts(&self) -> Vec<Fact> {
        self.goal
            .iter()
            .filter(|g| self.holds_world(g.pred.index, &g.args))
            .map(|g| g.with_kind(PredKind::Comparison))
            .collect()
    }

    /// Every goal fact is matched by the corresponding world fact.
    pub fn is_goal_state(&self) -> bool {
        self.goal.iter().all(|g| self.holds_world(g.pred.index, &g.args))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ON: u32 = 0;
    const ON_TABLE: u32 = 1;
    const CLEAR: u32 = 2;

    fn w(p: u32, args: &[u32]) -> Fact {
        Fact::new(PredId::world(p), args.iter().map(|&a| ObjId(a)))
    }

    fn g(p: u32, args: &[u32]) -> Fact {
        w(p, args).with_kind(PredKind::Goal)
    }

    #[test]
    fn goal_state_examples() {
        let (a, b) = (0, 1);
        let s = RelState::new(vec![w(ON_TABLE, &[a]), w(ON, &[a, b]), w(CLEAR, &[b])], vec![g(CLEAR, &[b])]);
        assert!(s.is_goal_state());
        let s = RelState::new(vec![w(ON_TABLE, &[a]), w(ON, &[a, b])], vec![g(CLEAR, &[b])]);
        assert!(!s.is_goal_state());
        let s = RelState::new(vec![w(ON, &[a, b])], vec![]);
        assert!(s.is_goal_state());
    }

    #[test]
    fn comparison_is_conjunction() {
        let s = RelState::new(vec![w(ON, &[0, 1])], vec![g(ON, &[0, 1])]);
        assert_eq!(s.comparison_facts(), vec![w(ON, &[0, 1]).with_kind(PredKind::Comparison)]);
        let s = RelState::new(vec![w(ON, &[0, 1])], vec![]);
        assert!(s.comparison_facts().is_empty());
    }

    #[test]
    fn comparison_matches_pairwise_brute_force() {
        // three-block tower a on b on c, goal wants a on b and b on a-table... mixed
        let world = vec![w(ON, &[0, 1]), w(ON, &[1, 2]), w(ON_TABLE, &[2]), w(CLEAR, &[0])];
        let goal = vec![g(ON, &[0, 1]), g(ON, &[2, 1]), g(ON_TABLE, &[2]), g(CLEAR, &[2])];
        let s = RelState::new(world.clone(), goal.clone());
        let mut brute = Vec::new();
        for wf in &world {
            for gf in &goal {
                if wf.pred.index == gf.pred.index && wf.args == gf.args {
                    brute.push(wf.with_kind(PredKind::Comparison));
                }
            }
        }
        brute.sort();
        let mut got = s.comparison_facts();
        got.sort();
        assert_eq!(got, brute);
        assert_eq!(got.len(), 2);
    }

    #[test]
    fn set_semantics() {
        let s = RelState::new(vec![w(CLEAR, &[0]), w(CLEAR, &[0])], vec![]);
        assert_eq!(s.world().len(), 1);
        assert_eq!(s.world_facts_of(CLEAR).len(), 1);
        assert!(s.world_facts_of(ON).is_empty());
    }
}
