use std::borrow::Cow;
use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;

use super::{
    binarize_predicates, ActionSchema, Binarization, Condition, Fact, GroundAction, ModelError, ObjId, Outcome,
    PredId, PredKind, PredicateDecl, PredicateTable, RelState, SchemaId, Simulator, Term, Universe,
};
use crate::rng::SimRng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub parent: Option<String>,
}

/// A planning domain: predicates, name-sorted action schemas, the type
/// hierarchy (types double as unary world predicates) and domain constants.
#[derive(Clone, Debug)]
pub struct Domain {
    pub name: String,
    pub requirements: Vec<String>,
    pub predicates: PredicateTable,
    pub schemas: Vec<ActionSchema>,
    pub types: Vec<TypeDecl>,
    /// Constants with optional type. Every problem universe starts with these.
    pub constants: Vec<(String, Option<String>)>,
}

impl Domain {
    pub fn new(
        name: impl Into<String>,
        world: Vec<PredicateDecl>,
        mut schemas: Vec<ActionSchema>,
        types: Vec<TypeDecl>,
        constants: Vec<(String, Option<String>)>,
    ) -> Result<Self, ModelError> {
        let predicates = PredicateTable::new(world)?;
        schemas.sort_by(|a, b| a.name.cmp(&b.name));
        for w in schemas.windows(2) {
            if w[0].name == w[1].name {
                return Err(ModelError::DuplicateSchema(w[0].name.clone()));
            }
        }
        for s in &schemas {
            s.validate()?;
            let atoms = s
                .precondition
                .iter()
                .filter_map(|c| match c {
                    Condition::Atom { atom, .. } => Some(atom),
                    _ => None,
                })
                .chain(s.outcomes.iter().flat_map(|o| o.add.iter().chain(&o.delete)));
            for a in atoms {
                if a.pred.index as usize >= predicates.world_count() {
                    return Err(ModelError::UnknownPredicate(format!("#{}", a.pred.index)));
                }
                if predicates.arity(a.pred) != a.args.len() {
                    return Err(ModelError::Arity(format!("{} in {}", predicates.name(a.pred), s.name)));
                }
            }
        }
        Ok(Domain { name: name.into(), requirements: Vec::new(), predicates, schemas, types, constants })
    }

    pub fn schema_id(&self, name: &str) -> Option<SchemaId> {
        self.schemas.iter().position(|s| s.name == name).map(|i| SchemaId(i as u32))
    }

    pub fn schema(&self, id: SchemaId) -> &ActionSchema {
        &self.schemas[id.0 as usize]
    }

    pub fn schema_ids(&self) -> impl Iterator<Item = SchemaId> {
        (0..self.schemas.len() as u32).map(SchemaId)
    }

    /// World predicate indices of `ty` and all of its ancestors.
    pub fn type_closure(&self, ty: &str) -> Result<Vec<u32>, ModelError> {
        let mut out = Vec::new();
        let mut cur = Some(ty.to_string());
        let mut guard = 0;
        while let Some(t) = cur {
            let id = self.predicates.lookup(&t).filter(|p| p.kind == PredKind::World);
            match id {
                Some(p) => out.push(p.index),
                None => return Err(ModelError::UnknownPredicate(t)),
            }
            cur = self.types.iter().find(|d| d.name == t).and_then(|d| d.parent.clone());
            guard += 1;
            if guard > self.types.len() + 1 {
                break;
            }
        }
        Ok(out)
    }
}

/// A domain instantiated over one object universe.
#[derive(Clone, Debug)]
pub struct RelationalMdp {
    domain: Arc<Domain>,
    universe: Arc<Universe>,
    view: Option<Arc<Binarization>>,
    positives: Vec<Vec<usize>>,
}

impl RelationalMdp {
    pub fn new(domain: Arc<Domain>, universe: Arc<Universe>) -> Result<Self, ModelError> {
        for (i, (c, _)) in domain.constants.iter().enumerate() {
            if universe.get(c) != Some(ObjId(i as u32)) {
                return Err(ModelError::UnknownObject(c.clone()));
            }
        }
        let needs_view = domain.predicates.world_decls().iter().any(|p| p.arity > 2);
        let view = if needs_view {
            Some(Arc::new(binarize_predicates(domain.predicates.world_decls(), universe.len())?))
        } else {
            None
        };
        let positives = domain
            .schemas
            .iter()
            .map(|s| {
                let mut idx: Vec<usize> = s
                    .precondition
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| matches!(c, Condition::Atom { positive: true, .. }))
                    .map(|(i, _)| i)
                    .collect();
                // nullary atoms first: they never bind and prune early
                idx.sort_by_key(|&i| match &s.precondition[i] {
                    Condition::Atom { atom, .. } => atom.args.is_empty() as u8 ^ 1,
                    _ => 1,
                });
                idx
            })
            .collect();
        Ok(RelationalMdp { domain, universe, view, positives })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn predicates(&self) -> &PredicateTable {
        &self.domain.predicates
    }

    pub fn schema(&self, id: SchemaId) -> &ActionSchema {
        self.domain.schema(id)
    }

    pub fn binarization(&self) -> Option<&Binarization> {
        self.view.as_deref()
    }

    /// Predicates visible to the policy language (binarized when needed).
    pub fn policy_predicates(&self) -> &PredicateTable {
        match &self.view {
            Some(b) => b.predicates(),
            None => &self.domain.predicates,
        }
    }

    /// The state as seen by the policy language.
    pub fn policy_state<'a>(&self, s: &'a RelState) -> Cow<'a, RelState> {
        match &self.view {
            Some(b) => Cow::Owned(b.binarize_state(s)),
            None => Cow::Borrowed(s),
        }
    }

    /// Size of the object universe seen by the policy language.
    pub fn policy_object_count(&self) -> usize {
        match &self.view {
            Some(b) => b.object_count(),
            None => self.universe.len(),
        }
    }

    fn holds_condition(&self, c: &Condition, binding: &[ObjId], s: &RelState) -> bool {
        let term = |t: &Term| match *t {
            Term::Var(i) => binding[i],
            Term::Const(o) => o,
        };
        match c {
            Condition::Atom { atom, positive } => {
                let args = atom.ground(binding);
                let f = Fact { pred: atom.pred, args };
                s.holds(&f) == *positive
            }
            Condition::Eq { left, right, positive } => (term(left) == term(right)) == *positive,
        }
    }

    pub fn is_legal(&self, s: &RelState, a: &GroundAction) -> bool {
        let Some(schema) = self.domain.schemas.get(a.schema.0 as usize) else {
            return false;
        };
        if schema.arity() != a.args.len() || a.args.iter().any(|o| o.index() >= self.universe.len()) {
            return false;
        }
        schema.precondition.iter().all(|c| self.holds_condition(c, &a.args, s))
    }

    fn match_positive(
        &self,
        sid: usize,
        depth: usize,
        binding: &mut Vec<Option<ObjId>>,
        s: &RelState,
        out: &mut Vec<GroundAction>,
    ) {
        let schema = &self.domain.schemas[sid];
        let order = &self.positives[sid];
        if depth == order.len() {
            self.enumerate_free(sid, binding, s, out);
            return;
        }
        let Condition::Atom { atom, .. } = &schema.precondition[order[depth]] else {
            unreachable!()
        };
        let facts = match atom.pred.kind {
            PredKind::World => s.world_facts_of(atom.pred.index),
            PredKind::Goal => s.goal_facts_of(atom.pred.index),
            PredKind::Comparison => {
                // rare; fall back to checking after full enumeration
                self.match_positive(sid, depth + 1, binding, s, out);
                return;
            }
        };
        let mut newly: smallvec::SmallVec<[usize; 4]> = smallvec::SmallVec::new();
        'facts: for f in facts {
            for v in newly.drain(..) {
                binding[v] = None;
            }
            for (t, &o) in atom.args.iter().zip(f.args.iter()) {
                match *t {
                    Term::Const(c) => {
                        if c != o {
                            continue 'facts;
                        }
                    }
                    Term::Var(v) => match binding[v] {
                        Some(b) if b != o => continue 'facts,
                        Some(_) => {}
                        None => {
                            binding[v] = Some(o);
                            newly.push(v);
                        }
                    },
                }
            }
            self.match_positive(sid, depth + 1, binding, s, out);
        }
        for v in newly.drain(..) {
            binding[v] = None;
        }
    }

    fn enumerate_free(&self, sid: usize, binding: &[Option<ObjId>], s: &RelState, out: &mut Vec<GroundAction>) {
        let schema = &self.domain.schemas[sid];
        let free: Vec<usize> = (0..binding.len()).filter(|&i| binding[i].is_none()).collect();
        let n = self.universe.len() as u32;
        let mut full: Vec<ObjId> = binding.iter().map(|b| b.unwrap_or(ObjId(0))).collect();
        if !free.is_empty() && n == 0 {
            return;
        }
        let mut counter = vec![0u32; free.len()];
        loop {
            for (slot, &v) in free.iter().enumerate() {
                full[v] = ObjId(counter[slot]);
            }
            if schema.precondition.iter().all(|c| self.holds_condition(c, &full, s)) {
                out.push(GroundAction::new(SchemaId(sid as u32), full.iter().copied()));
            }
            // odometer over the free slots
            let mut i = free.len();
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                counter[i] += 1;
                if counter[i] < n {
                    break;
                }
                counter[i] = 0;
            }
        }
    }

    /// Ground actions whose preconditions hold in the world facts of `s`,
    /// in action order. Goal states are not special-cased here.
    pub fn applicable_actions(&self, s: &RelState) -> Vec<GroundAction> {
        let mut out = Vec::new();
        for sid in 0..self.domain.schemas.len() {
            let mut binding = vec![None; self.domain.schemas[sid].arity()];
            self.match_positive(sid, 0, &mut binding, s, &mut out);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn sample_outcome<'a>(&self, schema: &'a ActionSchema, rng: &mut SimRng) -> &'a Outcome {
        if schema.outcomes.len() == 1 {
            return &schema.outcomes[0];
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for o in &schema.outcomes {
            acc += o.probability;
            if u < acc {
                return o;
            }
        }
        schema.outcomes.last().expect("validated schema has outcomes")
    }

    /// World facts after applying one outcome of a legal action.
    pub fn apply_outcome(&self, s: &RelState, a: &GroundAction, outcome: &Outcome) -> RelState {
        let deleted: HashSet<Fact> =
            outcome.delete.iter().map(|t| Fact { pred: t.pred, args: t.ground(&a.args) }).collect();
        let mut world: Vec<Fact> = s.world().iter().filter(|f| !deleted.contains(*f)).cloned().collect();
        world.extend(outcome.add.iter().map(|t| Fact { pred: t.pred, args: t.ground(&a.args) }));
        s.with_world(world)
    }

    /// The raw world transition: illegal actions are no-ops, goal states are
    /// not absorbing.
    pub fn world_step(&self, s: &RelState, a: &GroundAction, rng: &mut SimRng) -> RelState {
        if !self.is_legal(s, a) {
            return s.clone();
        }
        let schema = self.schema(a.schema);
        let o = self.sample_outcome(schema, rng);
        self.apply_outcome(s, a, o)
    }

    pub fn cost(&self, a: &GroundAction) -> f64 {
        self.domain.schemas.get(a.schema.0 as usize).map(|s| s.cost).unwrap_or(1.0)
    }

    pub fn format_fact(&self, f: &Fact) -> String {
        let mut out = format!("({}", self.domain.predicates.name(f.pred));
        for a in &f.args {
            let _ = write!(out, " {}", self.universe.name(*a));
        }
        out.push(')');
        out
    }

    pub fn format_action(&self, a: &GroundAction) -> String {
        let mut out = format!("({}", self.schema(a.schema).name);
        for o in &a.args {
            let _ = write!(out, " {}", self.universe.name(*o));
        }
        out.push(')');
        out
    }

    fn split_atom(text: &str) -> Option<Vec<String>> {
        let t = text.trim();
        let inner = t.strip_prefix('(')?.strip_suffix(')')?;
        let parts: Vec<String> = inner.split_whitespace().map(|p| p.to_ascii_lowercase()).collect();
        if parts.is_empty() {
            None
        } else {
            Some(parts)
        }
    }

    /// Parse `(pred obj ...)`; the predicate may be of any kind.
    pub fn parse_fact(&self, text: &str) -> Result<Fact, ModelError> {
        let parts = Self::split_atom(text).ok_or_else(|| ModelError::UnknownPredicate(text.to_string()))?;
        let pred = self.domain.predicates.lookup(&parts[0]).ok_or_else(|| ModelError::UnknownPredicate(parts[0].clone()))?;
        if self.domain.predicates.arity(pred) != parts.len() - 1 {
            return Err(ModelError::Arity(text.to_string()));
        }
        let args = parts[1..]
            .iter()
            .map(|n| self.universe.get(n).ok_or_else(|| ModelError::UnknownObject(n.clone())))
            .collect::<Result<_, _>>()?;
        Ok(Fact { pred, args })
    }

    pub fn parse_action(&self, text: &str) -> Result<GroundAction, ModelError> {
        let parts = Self::split_atom(text).ok_or_else(|| ModelError::Arity(text.to_string()))?;
        let sid = self.domain.schema_id(&parts[0]).ok_or_else(|| ModelError::UnknownPredicate(parts[0].clone()))?;
        if self.schema(sid).arity() != parts.len() - 1 {
            return Err(ModelError::Arity(text.to_string()));
        }
        let args: Vec<ObjId> = parts[1..]
            .iter()
            .map(|n| self.universe.get(n).ok_or_else(|| ModelError::UnknownObject(n.clone())))
            .collect::<Result<_, _>>()?;
        Ok(GroundAction::new(sid, args))
    }

    /// Build a state from world facts and goal facts given as world-predicate
    /// facts (the goal ones are re-tagged as goal facts).
    pub fn make_state(&self, world: Vec<Fact>, goal_as_world: Vec<Fact>) -> RelState {
        RelState::new(world, goal_as_world.into_iter().map(|f| f.with_kind(PredKind::Goal)))
    }

    pub fn pred(&self, name: &str) -> Option<PredId> {
        self.domain.predicates.lookup(name)
    }
}

impl Simulator for RelationalMdp {
    type State = RelState;
    type Action = GroundAction;

    fn legal_actions(&self, s: &RelState) -> Vec<GroundAction> {
        self.applicable_actions(s)
    }

    fn step(&self, s: &RelState, a: &GroundAction, rng: &mut SimRng) -> (RelState, f64) {
        if s.is_goal_state() {
            return (s.clone(), 0.0);
        }
        let reward = -self.cost(a);
        (self.world_step(s, a, rng), reward)
    }

    fn is_terminal(&self, s: &RelState) -> bool {
        s.is_goal_state()
    }
}
