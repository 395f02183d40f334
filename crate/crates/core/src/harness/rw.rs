//! Random-walk problem distributions.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::mdp::{Fact, PredKind, RelState, RelationalMdp, StateSampler};
use crate::rng::SimRng;

pub const DEFAULT_NOOP_PROBABILITY: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RwConfig {
    pub walk_length: usize,
    pub noop_probability: f64,
    /// Names of the world predicates whose facts become goals.
    pub goal_predicates: Vec<String>,
}

impl RwConfig {
    pub fn new(walk_length: usize, goal_predicates: Vec<String>) -> Self {
        RwConfig { walk_length, noop_probability: DEFAULT_NOOP_PROBABILITY, goal_predicates }
    }

    pub fn validate(&self, mdp: &RelationalMdp) -> Result<(), HarnessError> {
        if self.goal_predicates.is_empty() {
            return Err(HarnessError::Config("goal predicate set is empty".into()));
        }
        if !(0.0..1.0).contains(&self.noop_probability) {
            return Err(HarnessError::Config("no-op probability must lie in [0, 1)".into()));
        }
        for g in &self.goal_predicates {
            match mdp.predicates().lookup(g) {
                Some(p) if p.kind == PredKind::World => {}
                _ => return Err(HarnessError::Config(format!("unknown goal predicate {g}"))),
            }
        }
        Ok(())
    }

    fn goal_indices(&self, mdp: &RelationalMdp) -> Vec<u32> {
        self.goal_predicates.iter().filter_map(|g| mdp.predicates().lookup(g)).map(|p| p.index).collect()
    }
}

/// One `RW_n` problem: walk `n` random steps (each a no-op with the
/// configured probability) from a draw of `initial`, then pose the final
/// world's facts over the goal predicates as goals for the initial world.
pub fn sample_rw_problem<I>(mdp: &RelationalMdp, rw: &RwConfig, initial: &I, rng: &mut SimRng) -> RelState
where
    I: StateSampler<RelationalMdp> + ?Sized,
{
    let s0 = initial.sample(mdp, rng);
    let mut w = s0.clone();
    for _ in 0..rw.walk_length {
        if rng.gen_bool(rw.noop_probability) {
            continue;
        }
        let legal = mdp.applicable_actions(&w);
        let Some(a) = legal.choose(rng) else { continue };
        w = mdp.world_step(&w, a, rng);
    }
    let keep = rw.goal_indices(mdp);
    let goal: Vec<Fact> = w.world().iter().filter(|f| keep.contains(&f.pred.index)).cloned().collect();
    mdp.make_state(s0.world().to_vec(), goal)
}

/// `RW_n` over a base initial-state sampler.
#[derive(Clone, Debug)]
pub struct RandomWalkSampler<I> {
    pub initial: I,
    pub config: RwConfig,
}

impl<I: StateSampler<RelationalMdp>> StateSampler<RelationalMdp> for RandomWalkSampler<I> {
    fn sample(&self, mdp: &RelationalMdp, rng: &mut SimRng) -> RelState {
        sample_rw_problem(mdp, &self.config, &self.initial, rng)
    }
}

/// Uniform draws from a fixed list of problems.
#[derive(Clone, Debug)]
pub struct ProblemSet(pub Vec<RelState>);

impl StateSampler<RelationalMdp> for ProblemSet {
    fn sample(&self, _mdp: &RelationalMdp, rng: &mut SimRng) -> RelState {
        self.0.choose(rng).expect("non-empty problem set").clone()
    }
}
