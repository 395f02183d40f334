use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PredKind {
    World,
    Goal,
    Comparison,
}

impl PredKind {
    pub fn prefix(self) -> &'static str {
        match self {
            PredKind::World => "",
            PredKind::Goal => "g",
            PredKind::Comparison => "c",
        }
    }
}

/// Identifies a predicate by kind and by the index of its underlying world
/// predicate, so `gp` and `cp` can be recovered from `p` without a table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PredId {
    pub kind: PredKind,
    pub index: u32,
}

impl PredId {
    pub fn world(index: u32) -> Self {
        PredId { kind: PredKind::World, index }
    }

    pub fn with_kind(self, kind: PredKind) -> Self {
        PredId { kind, index: self.index }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PredicateDecl {
    pub name: String,
    pub arity: usize,
    pub kind: PredKind,
}

impl PredicateDecl {
    pub fn world(name: impl Into<String>, arity: usize) -> Self {
        PredicateDecl { name: name.into(), arity, kind: PredKind::World }
    }
}

/// Extend world predicates with their goal (`g`-prefixed) and comparison
/// (`c`-prefixed) counterparts. The result lists all world predicates, then
/// the goal predicates, then the comparison predicates, each in input order.
pub fn derive_goal_schema(world: &[PredicateDecl]) -> Result<Vec<PredicateDecl>, ModelError> {
    let mut out = Vec::with_capacity(world.len() * 3);
    let mut seen: HashMap<String, String> = HashMap::new();
    for kind in [PredKind::World, PredKind::Goal, PredKind::Comparison] {
        for p in world {
            if p.kind != PredKind::World {
                return Err(ModelError::NotAWorldPredicate(p.name.clone()));
            }
            let name = format!("{}{}", kind.prefix(), p.name);
            if let Some(owner) = seen.get(&name) {
                return Err(ModelError::NameClash(format!("{name} (from {} and {owner})", p.name)));
            }
            seen.insert(name.clone(), p.name.clone());
            out.push(PredicateDecl { name, arity: p.arity, kind });
        }
    }
    Ok(out)
}

/// World predicates together with their derived goal and comparison
/// predicates.
#[derive(Clone, Debug)]
pub struct PredicateTable {
    world: Vec<PredicateDecl>,
    names: Vec<[String; 3]>,
    by_name: HashMap<String, PredId>,
}

impl PredicateTable {
    pub fn new(world: Vec<PredicateDecl>) -> Result<Self, ModelError> {
        let all = derive_goal_schema(&world)?;
        let n = world.len();
        let mut names = Vec::with_capacity(n);
        let mut by_name = HashMap::with_capacity(all.len());
        for i in 0..n {
            names.push([all[i].name.clone(), all[n + i].name.clone(), all[2 * n + i].name.clone()]);
            for (k, kind) in [PredKind::World, PredKind::Goal, PredKind::Comparison].into_iter().enumerate() {
                by_name.insert(all[k * n + i].name.clone(), PredId { kind, index: i as u32 });
            }
        }
        Ok(PredicateTable { world, names, by_name })
    }

    pub fn world_decls(&self) -> &[PredicateDecl] {
        &self.world
    }

    pub fn world_count(&self) -> usize {
        self.world.len()
    }

    pub fn name(&self, id: PredId) -> &str {
        let slot = match id.kind {
            PredKind::World => 0,
            PredKind::Goal => 1,
            PredKind::Comparison => 2,
        };
        &self.names[id.index as usize][slot]
    }

    pub fn arity(&self, id: PredId) -> usize {
        self.world[id.index as usize].arity
    }

    pub fn lookup(&self, name: &str) -> Option<PredId> {
        self.by_name.get(name).copied()
    }

    /// All predicates (every kind) of the given arity: world ones first,
    /// then goal, then comparison.
    pub fn with_arity(&self, arity: usize) -> Vec<PredId> {
        let mut out = Vec::new();
        for kind in [PredKind::World, PredKind::Goal, PredKind::Comparison] {
            for (i, p) in self.world.iter().enumerate() {
                if p.arity == arity {
                    out.push(PredId { kind, index: i as u32 });
                }
            }
        }
        out
    }
}
