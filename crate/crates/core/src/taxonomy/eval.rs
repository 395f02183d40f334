use std::collections::HashMap;

use super::{ClassExpr, ObjSet, RelExpr, TaxonomyError};
use crate::mdp::{ObjId, PredId, PredKind, RelState};

pub type RelId = u32;
pub type ClassId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelNode {
    Prim(PredId),
    Inverse(RelId),
    Star(RelId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClassNode {
    Prim(PredId),
    Var(usize),
    AThing,
    Not(ClassId),
    Apply(RelId, ClassId),
    Min(RelId),
}

/// Hash-consed expressions. Structurally equal subexpressions share one id,
/// so their interpretations are computed once per state.
#[derive(Clone, Debug, Default)]
pub struct ExprArena {
    rels: Vec<RelNode>,
    rel_index: HashMap<RelNode, RelId>,
    classes: Vec<ClassNode>,
    class_index: HashMap<ClassNode, ClassId>,
    /// The single variable a class chain depends on, if any.
    class_var: Vec<Option<usize>>,
}

impl ExprArena {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rel_count(&self) -> usize {
        self.rels.len()
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn rel_node(&self, r: RelId) -> RelNode {
        self.rels[r as usize]
    }

    pub fn class_node(&self, c: ClassId) -> ClassNode {
        self.classes[c as usize]
    }

    pub fn class_var(&self, c: ClassId) -> Option<usize> {
        self.class_var[c as usize]
    }

    pub fn add_rel(&mut self, node: RelNode) -> RelId {
        if let Some(&id) = self.rel_index.get(&node) {
            return id;
        }
        let id = self.rels.len() as RelId;
        self.rels.push(node);
        self.rel_index.insert(node, id);
        id
    }

    pub fn add_class(&mut self, node: ClassNode) -> ClassId {
        if let Some(&id) = self.class_index.get(&node) {
            return id;
        }
        let var = match node {
            ClassNode::Var(i) => Some(i),
            ClassNode::Not(c) | ClassNode::Apply(_, c) => self.class_var[c as usize],
            _ => None,
        };
        let id = self.classes.len() as ClassId;
        self.classes.push(node);
        self.class_var.push(var);
        self.class_index.insert(node, id);
        id
    }

    pub fn intern_rel(&mut self, r: &RelExpr) -> RelId {
        let node = match r {
            RelExpr::Prim(p) => RelNode::Prim(*p),
            RelExpr::Inverse(x) => RelNode::Inverse(self.intern_rel(x)),
            RelExpr::Star(x) => RelNode::Star(self.intern_rel(x)),
        };
        self.add_rel(node)
    }

    pub fn intern_class(&mut self, c: &ClassExpr) -> ClassId {
        let node = match c {
            ClassExpr::Prim(p) => ClassNode::Prim(*p),
            ClassExpr::Var(i) => ClassNode::Var(*i),
            ClassExpr::AThing => ClassNode::AThing,
            ClassExpr::Not(x) => ClassNode::Not(self.intern_class(x)),
            ClassExpr::Apply(r, x) => {
                let r = self.intern_rel(r);
                ClassNode::Apply(r, self.intern_class(x))
            }
            ClassExpr::Min(r) => ClassNode::Min(self.intern_rel(r)),
        };
        self.add_class(node)
    }

    pub fn rel_expr(&self, r: RelId) -> RelExpr {
        match self.rels[r as usize] {
            RelNode::Prim(p) => RelExpr::Prim(p),
            RelNode::Inverse(x) => self.rel_expr(x).inverse(),
            RelNode::Star(x) => self.rel_expr(x).star(),
        }
    }

    pub fn class_expr(&self, c: ClassId) -> ClassExpr {
        match self.classes[c as usize] {
            ClassNode::Prim(p) => ClassExpr::Prim(p),
            ClassNode::Var(i) => ClassExpr::Var(i),
            ClassNode::AThing => ClassExpr::AThing,
            ClassNode::Not(x) => self.class_expr(x).not(),
            ClassNode::Apply(r, x) => ClassExpr::apply(self.rel_expr(r), self.class_expr(x)),
            ClassNode::Min(r) => ClassExpr::Min(self.rel_expr(r)),
        }
    }
}

/// A binary relation stored as successor rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub rows: Vec<ObjSet>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        Relation { rows: vec![ObjSet::empty(n); n] }
    }

    pub fn insert(&mut self, a: ObjId, b: ObjId) {
        if let Some(r) = self.rows.get_mut(a.index()) {
            r.insert(b);
        }
    }

    pub fn contains(&self, a: ObjId, b: ObjId) -> bool {
        self.rows.get(a.index()).is_some_and(|r| r.contains(b))
    }

    pub fn inverse(&self) -> Self {
        let n = self.rows.len();
        let mut out = Relation::empty(n);
        for (a, row) in self.rows.iter().enumerate() {
            for b in row.iter() {
                out.rows[b.index()].insert(ObjId(a as u32));
            }
        }
        out
    }

    /// Identity plus transitive closure.
    pub fn star(&self) -> Self {
        let n = self.rows.len();
        let mut rows = self.rows.clone();
        for k in 0..n {
            let rk = rows[k].clone();
            for row in rows.iter_mut() {
                if row.contains(ObjId(k as u32)) {
                    row.union_with(&rk);
                }
            }
        }
        for (i, row) in rows.iter_mut().enumerate() {
            row.insert(ObjId(i as u32));
        }
        Relation { rows }
    }

    pub fn pairs(&self) -> Vec<(ObjId, ObjId)> {
        let mut out = Vec::new();
        for (a, row) in self.rows.iter().enumerate() {
            out.extend(row.iter().map(|b| (ObjId(a as u32), b)));
        }
        out
    }

    /// `{o | ∃c ∈ set, (c, o) ∈ R}`.
    pub fn image(&self, set: &ObjSet) -> ObjSet {
        let mut out = ObjSet::empty(set.universe_size());
        for c in set.iter() {
            if let Some(row) = self.rows.get(c.index()) {
                out.union_with(row);
            }
        }
        out
    }

    /// Objects with an outgoing edge and no incoming edge.
    pub fn minimal(&self, n: usize) -> ObjSet {
        let mut has_in = ObjSet::empty(n);
        let mut has_out = ObjSet::empty(n);
        for (a, row) in self.rows.iter().enumerate() {
            has_in.union_with(row);
            if !row.is_empty() {
                has_out.insert(ObjId(a as u32));
            }
        }
        has_out.difference_with(&has_in);
        has_out
    }
}

fn facts_of(s: &RelState, p: PredId) -> Box<dyn Iterator<Item = &[ObjId]> + '_> {
    match p.kind {
        PredKind::World => Box::new(s.world_facts_of(p.index).iter().map(|f| f.args.as_slice())),
        PredKind::Goal => Box::new(s.goal_facts_of(p.index).iter().map(|f| f.args.as_slice())),
        PredKind::Comparison => Box::new(
            s.goal_facts_of(p.index).iter().filter(move |g| s.holds_world(p.index, &g.args)).map(|f| f.args.as_slice()),
        ),
    }
}

pub fn primitive_class(s: &RelState, n: usize, p: PredId) -> ObjSet {
    let mut out = ObjSet::empty(n);
    for args in facts_of(s, p) {
        if let [a] = args {
            out.insert(*a);
        }
    }
    out
}

pub fn primitive_relation(s: &RelState, n: usize, p: PredId) -> Relation {
    let mut out = Relation::empty(n);
    for args in facts_of(s, p) {
        if let [a, b] = args {
            out.insert(*a, *b);
        }
    }
    out
}

/// Memoizing interpreter of arena expressions in one state.
pub struct Interp<'a> {
    arena: &'a ExprArena,
    state: &'a RelState,
    n: usize,
    rels: Vec<Option<Relation>>,
    classes: Vec<Option<ObjSet>>,
    bound: HashMap<(ClassId, ObjId), ObjSet>,
}

impl<'a> Interp<'a> {
    pub fn new(arena: &'a ExprArena, state: &'a RelState, n: usize) -> Self {
        Interp {
            arena,
            state,
            n,
            rels: vec![None; arena.rel_count()],
            classes: vec![None; arena.class_count()],
            bound: HashMap::new(),
        }
    }

    pub fn object_count(&self) -> usize {
        self.n
    }

    pub fn relation(&mut self, r: RelId) -> &Relation {
        if self.rels[r as usize].is_none() {
            let rel = match self.arena.rel_node(r) {
                RelNode::Prim(p) => primitive_relation(self.state, self.n, p),
                RelNode::Inverse(x) => self.relation(x).inverse(),
                RelNode::Star(x) => self.relation(x).star(),
            };
            self.rels[r as usize] = Some(rel);
        }
        self.rels[r as usize].as_ref().unwrap()
    }

    fn compute(&mut self, c: ClassId, binding: &[ObjId]) -> Result<ObjSet, TaxonomyError> {
        Ok(match self.arena.class_node(c) {
            ClassNode::Prim(p) => primitive_class(self.state, self.n, p),
            ClassNode::Var(i) => {
                let o = *binding.get(i).ok_or(TaxonomyError::UnboundVar(i))?;
                ObjSet::singleton(self.n, o)
            }
            ClassNode::AThing => ObjSet::full(self.n),
            ClassNode::Not(x) => self.class(x, binding)?.complement(),
            ClassNode::Apply(r, x) => {
                let inner = self.class(x, binding)?;
                self.relation(r).image(&inner)
            }
            ClassNode::Min(r) => {
                let n = self.n;
                self.relation(r).minimal(n)
            }
        })
    }

    /// Interpretation of `c` under `binding` (argument objects by position).
    pub fn class(&mut self, c: ClassId, binding: &[ObjId]) -> Result<ObjSet, TaxonomyError> {
        match self.arena.class_var(c) {
            None => {
                if let Some(s) = &self.classes[c as usize] {
                    return Ok(s.clone());
                }
                let s = self.compute(c, binding)?;
                self.classes[c as usize] = Some(s.clone());
                Ok(s)
            }
            Some(v) => {
                let o = *binding.get(v).ok_or(TaxonomyError::UnboundVar(v))?;
                if let Some(s) = self.bound.get(&(c, o)) {
                    return Ok(s.clone());
                }
                let s = self.compute(c, binding)?;
                self.bound.insert((c, o), s.clone());
                Ok(s)
            }
        }
    }

    /// Whether `o ∈ c` under `binding`.
    pub fn member(&mut self, c: ClassId, binding: &[ObjId], o: ObjId) -> Result<bool, TaxonomyError> {
        Ok(self.class(c, binding)?.contains(o))
    }
}

/// Pairs of a relation expression in `s` over `n` objects, sorted.
pub fn interpret_rel(r: &RelExpr, s: &RelState, n: usize) -> Vec<(ObjId, ObjId)> {
    let mut arena = ExprArena::new();
    let id = arena.intern_rel(r);
    let mut it = Interp::new(&arena, s, n);
    it.relation(id).pairs()
}

/// Objects denoted by `e` in `s` over `n` objects with action arguments
/// `binding`.
pub fn interpret_class(e: &ClassExpr, s: &RelState, n: usize, binding: &[ObjId]) -> Result<ObjSet, TaxonomyError> {
    let mut arena = ExprArena::new();
    let id = arena.intern_class(e);
    let mut it = Interp::new(&arena, s, n);
    it.class(id, binding)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::Fact;

    fn on(a: u32, b: u32) -> Fact {
        Fact::new(PredId::world(0), [ObjId(a), ObjId(b)])
    }

    #[test]
    fn inverse_flips_pairs() {
        let s = RelState::new(vec![on(0, 1)], vec![]);
        let r = RelExpr::Prim(PredId::world(0)).inverse();
        assert_eq!(interpret_rel(&r, &s, 3), vec![(ObjId(1), ObjId(0))]);
    }

    #[test]
    fn star_contains_identity_and_chains() {
        let s = RelState::new(vec![on(0, 1), on(1, 2)], vec![]);
        let r = RelExpr::Prim(PredId::world(0)).star();
        let pairs = interpret_rel(&r, &s, 4);
        for i in 0..4 {
            assert!(pairs.contains(&(ObjId(i), ObjId(i))));
        }
        assert!(pairs.contains(&(ObjId(0), ObjId(2))));
        assert!(!pairs.contains(&(ObjId(2), ObjId(0))));
    }

    #[test]
    fn var_and_athing() {
        let s = RelState::new(vec![], vec![]);
        let got = interpret_class(&ClassExpr::Var(0), &s, 3, &[ObjId(1), ObjId(2)]).unwrap();
        assert_eq!(got.to_vec(), vec![ObjId(1)]);
        assert_eq!(interpret_class(&ClassExpr::AThing, &s, 3, &[]).unwrap().len(), 3);
        assert_eq!(interpret_class(&ClassExpr::Var(2), &s, 3, &[ObjId(0)]), Err(TaxonomyError::UnboundVar(2)));
    }

    #[test]
    fn min_of_cycle_is_empty() {
        let s = RelState::new(vec![on(0, 1), on(1, 0), on(2, 3)], vec![]);
        let got = interpret_class(&ClassExpr::Min(RelExpr::Prim(PredId::world(0))), &s, 5, &[]).unwrap();
        assert_eq!(got.to_vec(), vec![ObjId(2)]);
    }
}
