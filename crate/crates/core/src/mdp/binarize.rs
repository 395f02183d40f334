//! Rewriting of predicates of arity three or more into binary projections.
//!
//! A fact `p(a,b,c)` becomes `p_arg1(t,a)`, `p_arg2(t,b)`, `p_arg3(t,c)` where
//! `t` is the tuple object for `(a,b,c)`. Tuple objects are allocated up front
//! for every possible tuple, after the base objects, so the object universe
//! of a problem stays fixed. World and goal copies of the same tuple share one
//! tuple object, which keeps comparison predicates meaningful.

use super::{Fact, ModelError, ObjId, PredId, PredicateDecl, PredicateTable, RelState, Universe};

pub const MAX_TUPLE_OBJECTS: usize = 1 << 16;
pub const MAX_BINARIZED_ARITY: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Mapped {
    Same(u32),
    Split { first: u32, arity: usize, offset: usize },
}

#[derive(Clone, Debug)]
pub struct Binarization {
    base_objects: usize,
    tuple_objects: usize,
    table: PredicateTable,
    map: Vec<Mapped>,
    /// binarized index -> (original index, argument position or None)
    back: Vec<(u32, Option<usize>)>,
}

/// Binarize a world predicate list over a universe of `base_objects` objects.
pub fn binarize_predicates(world: &[PredicateDecl], base_objects: usize) -> Result<Binarization, ModelError> {
    let mut decls = Vec::new();
    let mut map = Vec::with_capacity(world.len());
    let mut back = Vec::new();
    let mut offset = 0usize;
    for (i, p) in world.iter().enumerate() {
        if p.arity <= 2 {
            map.push(Mapped::Same(decls.len() as u32));
            back.push((i as u32, None));
            decls.push(p.clone());
            continue;
        }
        if p.arity > MAX_BINARIZED_ARITY {
            return Err(ModelError::UnsupportedArity { name: p.name.clone(), arity: p.arity });
        }
        let count = base_objects
            .checked_pow(p.arity as u32)
            .filter(|c| offset + c <= MAX_TUPLE_OBJECTS)
            .ok_or(ModelError::TooManyTuples(offset.saturating_add(base_objects.saturating_pow(p.arity as u32))))?;
        map.push(Mapped::Split { first: decls.len() as u32, arity: p.arity, offset });
        for k in 0..p.arity {
            back.push((i as u32, Some(k)));
            decls.push(PredicateDecl::world(format!("{}_arg{}", p.name, k + 1), 2));
        }
        offset += count;
    }
    let table = PredicateTable::new(decls)?;
    Ok(Binarization { base_objects, tuple_objects: offset, table, map, back })
}

impl Binarization {
    pub fn predicates(&self) -> &PredicateTable {
        &self.table
    }

    pub fn object_count(&self) -> usize {
        self.base_objects + self.tuple_objects
    }

    fn tuple_object(&self, offset: usize, args: &[ObjId]) -> ObjId {
        let mut rank = 0usize;
        for a in args {
            rank = rank * self.base_objects + a.index();
        }
        ObjId((self.base_objects + offset + rank) as u32)
    }

    fn binarize_fact(&self, f: &Fact, out: &mut Vec<Fact>) {
        match &self.map[f.pred.index as usize] {
            Mapped::Same(j) => out.push(Fact { pred: PredId { kind: f.pred.kind, index: *j }, args: f.args.clone() }),
            Mapped::Split { first, offset, .. } => {
                let t = self.tuple_object(*offset, &f.args);
                for (k, &a) in f.args.iter().enumerate() {
                    out.push(Fact::new(PredId { kind: f.pred.kind, index: first + k as u32 }, [t, a]));
                }
            }
        }
    }

    pub fn binarize_state(&self, s: &RelState) -> RelState {
        let mut world = Vec::with_capacity(s.world().len());
        for f in s.world() {
            self.binarize_fact(f, &mut world);
        }
        let mut goal = Vec::with_capacity(s.goal().len());
        for f in s.goal() {
            self.binarize_fact(f, &mut goal);
        }
        RelState::new(world, goal)
    }

    fn reconstruct_facts(&self, facts: &[Fact]) -> Vec<Fact> {
        use std::collections::BTreeMap;
        let mut out = Vec::new();
        // (kind, original index, tuple object) -> argument slots
        let mut partial: BTreeMap<(u8, u32, ObjId), Vec<Option<ObjId>>> = BTreeMap::new();
        for f in facts {
            let (orig, pos) = self.back[f.pred.index as usize];
            match pos {
                None => out.push(Fact { pred: PredId { kind: f.pred.kind, index: orig }, args: f.args.clone() }),
                Some(k) => {
                    let Mapped::Split { arity, .. } = self.map[orig as usize] else { unreachable!() };
                    let slots = partial.entry((f.pred.kind as u8, orig, f.args[0])).or_insert_with(|| vec![None; arity]);
                    slots[k] = Some(f.args[1]);
                }
            }
        }
        for ((_, orig, t), slots) in partial {
            if slots.iter().all(Option::is_some) {
                let kind = facts
                    .iter()
                    .find(|f| f.args.first() == Some(&t) && self.back[f.pred.index as usize].0 == orig)
                    .map(|f| f.pred.kind)
                    .expect("slot came from a fact");
                out.push(Fact::new(PredId { kind, index: orig }, slots.into_iter().map(Option::unwrap)));
            }
        }
        out
    }

    /// Inverse of [`Binarization::binarize_state`].
    pub fn reconstruct_state(&self, s: &RelState) -> RelState {
        RelState::new(self.reconstruct_facts(s.world()), self.reconstruct_facts(s.goal()))
    }

    /// Name of an object in the binarized universe.
    pub fn object_name(&self, universe: &Universe, o: ObjId) -> String {
        if o.index() < self.base_objects {
            return universe.name(o).to_string();
        }
        let mut rel = o.index() - self.base_objects;
        for (i, m) in self.map.iter().enumerate() {
            if let Mapped::Split { arity, offset, .. } = *m {
                let count = self.base_objects.pow(arity as u32);
                if rel >= offset && rel < offset + count {
                    rel -= offset;
                    let mut args = vec![0usize; arity];
                    for k in (0..arity).rev() {
                        args[k] = rel % self.base_objects;
                        rel /= self.base_objects;
                    }
                    let names: Vec<&str> = args.iter().map(|&a| universe.name(ObjId(a as u32))).collect();
                    let pname = &self.table.name(PredId::world(self.first_of(i)));
                    let pname = pname.trim_end_matches("_arg1");
                    return format!("{}<{}>", pname, names.join(","));
                }
            }
        }
        format!("#{}", o.0)
    }

    fn first_of(&self, orig: usize) -> u32 {
        match self.map[orig] {
            Mapped::Same(j) => j,
            Mapped::Split { first, .. } => first,
        }
    }
}
