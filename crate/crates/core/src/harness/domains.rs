//! Shipped domain definitions and problem generators.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::mdp::{Domain, Fact, ObjId, RelState, RelationalMdp, StateSampler, Universe};
use crate::parser::parse_domain;
use crate::rng::SimRng;

pub const BLOCKS_PDDL: &str = include_str!("domains/blocks.pddl");
pub const GRIPPER_PDDL: &str = include_str!("domains/gripper.pddl");
pub const BRIEFCASE_PDDL: &str = include_str!("domains/briefcase.pddl");
pub const CLEARRED_PDDL: &str = include_str!("domains/clearred.pddl");

/// Domain text of a shipped domain by name.
pub fn builtin_domain_text(name: &str) -> Option<&'static str> {
    match name {
        "blocks" => Some(BLOCKS_PDDL),
        "gripper" => Some(GRIPPER_PDDL),
        "briefcase" => Some(BRIEFCASE_PDDL),
        "clearred" => Some(CLEARRED_PDDL),
        _ => None,
    }
}

pub fn builtin_domain(name: &str) -> Result<Domain, HarnessError> {
    let text = builtin_domain_text(name).ok_or_else(|| HarnessError::Config(format!("unknown domain {name}")))?;
    Ok(parse_domain(text).expect("shipped domain parses"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Blocks,
    Gripper,
    ClearRed,
}

impl GeneratorKind {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Blocks => "blocks",
            GeneratorKind::Gripper => "gripper",
            GeneratorKind::ClearRed => "clearred",
        }
    }
}

/// A shipped problem generator and its size: block count or ball count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub size: usize,
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.name(), self.size)
    }
}

impl FromStr for GeneratorSpec {
    type Err = HarnessError;

    /// `blocks:8`, `gripper:4`, `clearred:5`.
    fn from_str(s: &str) -> Result<Self, HarnessError> {
        let (name, size) = s.split_once(':').ok_or_else(|| HarnessError::Config(format!("expected NAME:SIZE, got {s}")))?;
        let size: usize = size.trim().parse().map_err(|_| HarnessError::Config(format!("bad generator size in {s}")))?;
        GeneratorSpec::new(name.trim(), size)
    }
}

impl GeneratorSpec {
    pub fn new(name: &str, size: usize) -> Result<Self, HarnessError> {
        let kind = match name {
            "blocks" => GeneratorKind::Blocks,
            "gripper" => GeneratorKind::Gripper,
            "clearred" | "clear-red" => GeneratorKind::ClearRed,
            _ => return Err(HarnessError::Config(format!("no generator named {name}"))),
        };
        if size == 0 || (kind == GeneratorKind::ClearRed && size < 2) {
            return Err(HarnessError::Config(format!("generator size {size} too small for {name}")));
        }
        Ok(GeneratorSpec { kind, size })
    }

    pub fn domain(&self) -> Domain {
        builtin_domain(self.kind.name()).expect("shipped domain")
    }

    pub fn object_names(&self) -> Vec<String> {
        match self.kind {
            GeneratorKind::Blocks | GeneratorKind::ClearRed => (1..=self.size).map(|i| format!("b{i}")).collect(),
            GeneratorKind::Gripper => {
                let mut v: Vec<String> = ["rooma", "roomb", "left", "right"].iter().map(|s| s.to_string()).collect();
                v.extend((1..=self.size).map(|i| format!("ball{i}")));
                v
            }
        }
    }

    pub fn mdp(&self) -> RelationalMdp {
        let universe = Universe::from_names(self.object_names()).expect("distinct names");
        RelationalMdp::new(Arc::new(self.domain()), Arc::new(universe)).expect("generator universe fits domain")
    }

    /// Goal predicates used for random-walk problems in this domain.
    pub fn default_goal_predicates(&self) -> Vec<String> {
        match self.kind {
            GeneratorKind::Blocks => vec!["on".into(), "on-table".into()],
            GeneratorKind::Gripper => vec!["at".into()],
            GeneratorKind::ClearRed => vec!["clear".into()],
        }
    }

    /// A fresh problem. `mdp` must come from [`GeneratorSpec::mdp`].
    pub fn generate(&self, mdp: &RelationalMdp, rng: &mut SimRng) -> RelState {
        match self.kind {
            GeneratorKind::Blocks => blocks_problem(mdp, self.size, rng),
            GeneratorKind::Gripper => gripper_problem(mdp, self.size),
            GeneratorKind::ClearRed => clearred_problem(mdp, self.size, rng),
        }
    }
}

/// Samples problems from a shipped generator.
#[derive(Clone, Copy, Debug)]
pub struct GeneratorSampler(pub GeneratorSpec);

impl StateSampler<RelationalMdp> for GeneratorSampler {
    fn sample(&self, mdp: &RelationalMdp, rng: &mut SimRng) -> RelState {
        self.0.generate(mdp, rng)
    }
}

fn fact(mdp: &RelationalMdp, pred: &str, args: &[ObjId]) -> Fact {
    Fact::new(mdp.pred(pred).unwrap_or_else(|| panic!("domain lacks {pred}")), args.iter().copied())
}

fn obj(mdp: &RelationalMdp, name: &str) -> ObjId {
    mdp.universe().get(name).unwrap_or_else(|| panic!("universe lacks {name}"))
}

/// Random partition of `blocks` into towers, bottom first.
pub fn random_towers(blocks: &[ObjId], rng: &mut SimRng) -> Vec<Vec<ObjId>> {
    let mut order = blocks.to_vec();
    order.shuffle(rng);
    let mut towers: Vec<Vec<ObjId>> = Vec::new();
    for b in order {
        match towers.last_mut() {
            Some(t) if rng.gen_bool(0.5) => t.push(b),
            _ => towers.push(vec![b]),
        }
    }
    towers
}

/// `(on x y)` for x directly on y, `on-table` for bottoms, `clear` for tops.
fn tower_facts(mdp: &RelationalMdp, towers: &[Vec<ObjId>], on: &str, supports_first: bool, with_clear: bool) -> Vec<Fact> {
    let mut out = Vec::new();
    for t in towers {
        out.push(fact(mdp, "on-table", &[t[0]]));
        for w in t.windows(2) {
            let (below, above) = (w[0], w[1]);
            let args = if supports_first { [below, above] } else { [above, below] };
            out.push(fact(mdp, on, &args));
        }
        if with_clear {
            out.push(fact(mdp, "clear", &[*t.last().unwrap()]));
        }
    }
    out
}

fn blocks_problem(mdp: &RelationalMdp, n: usize, rng: &mut SimRng) -> RelState {
    let blocks: Vec<ObjId> = (1..=n).map(|i| obj(mdp, &format!("b{i}"))).collect();
    let init = random_towers(&blocks, rng);
    let goal = random_towers(&blocks, rng);
    let mut world = tower_facts(mdp, &init, "on", false, true);
    world.push(fact(mdp, "handempty", &[]));
    let goal = tower_facts(mdp, &goal, "on", false, false);
    mdp.make_state(world, goal)
}

fn gripper_problem(mdp: &RelationalMdp, balls: usize) -> RelState {
    let (a, b) = (obj(mdp, "rooma"), obj(mdp, "roomb"));
    let mut world = vec![
        fact(mdp, "room", &[a]),
        fact(mdp, "room", &[b]),
        fact(mdp, "at-robby", &[a]),
    ];
    for g in ["left", "right"] {
        let g = obj(mdp, g);
        world.push(fact(mdp, "gripper", &[g]));
        world.push(fact(mdp, "free", &[g]));
    }
    let mut goal = Vec::new();
    for i in 1..=balls {
        let ball = obj(mdp, &format!("ball{i}"));
        world.push(fact(mdp, "ball", &[ball]));
        world.push(fact(mdp, "at", &[ball, a]));
        goal.push(fact(mdp, "at", &[ball, b]));
    }
    mdp.make_state(world, goal)
}

fn clearred_problem(mdp: &RelationalMdp, n: usize, rng: &mut SimRng) -> RelState {
    let blocks: Vec<ObjId> = (1..=n).map(|i| obj(mdp, &format!("b{i}"))).collect();
    loop {
        let towers = random_towers(&blocks, rng);
        let red: Vec<ObjId> = blocks.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        let mut world = tower_facts(mdp, &towers, "on", true, true);
        world.push(fact(mdp, "handempty", &[]));
        world.extend(red.iter().map(|&r| fact(mdp, "red", &[r])));
        let goal: Vec<Fact> = red.iter().map(|&r| fact(mdp, "clear", &[r])).collect();
        let s = mdp.make_state(world, goal);
        if !red.is_empty() && !s.is_goal_state() {
            return s;
        }
    }
}

/// Whether the world facts of a standard blocks state form valid towers:
/// every block rests on exactly one support, supports hold at most one
/// block, there are no cycles, and `clear` marks exactly the tops.
pub fn valid_towers(mdp: &RelationalMdp, s: &RelState) -> bool {
    let n = mdp.universe().len();
    let (Some(on), Some(table), Some(clear), Some(holding)) = (mdp.pred("on"), mdp.pred("on-table"), mdp.pred("clear"), mdp.pred("holding")) else {
        return false;
    };
    let mut below: Vec<Option<usize>> = vec![None; n];
    let mut supports = vec![0usize; n];
    let mut on_table = vec![false; n];
    let mut held = vec![false; n];
    for f in s.world() {
        if f.pred == on {
            let (x, y) = (f.args[0].index(), f.args[1].index());
            if below[x].is_some() || x == y {
                return false;
            }
            below[x] = Some(y);
            supports[y] += 1;
        } else if f.pred == table {
            on_table[f.args[0].index()] = true;
        } else if f.pred == holding {
            held[f.args[0].index()] = true;
        }
    }
    for x in 0..n {
        let placements = usize::from(below[x].is_some()) + usize::from(on_table[x]) + usize::from(held[x]);
        if placements != 1 || supports[x] > 1 {
            return false;
        }
        if held[x] && supports[x] > 0 {
            return false;
        }
        let is_clear = s.holds_world(clear.index, &[ObjId(x as u32)]);
        if is_clear != (supports[x] == 0 && !held[x]) {
            return false;
        }
        // Walk down; a cycle never reaches the table.
        let mut cur = x;
        let mut steps = 0;
        while let Some(y) = below[cur] {
            cur = y;
            steps += 1;
            if steps > n {
                return false;
            }
        }
    }
    true
}
