//! Monte-Carlo policy rollout and improved-trajectory generation.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{ModelError, Policy, RelState, RelationalMdp, Simulator, StateSampler};
use crate::rng::{fork_many, SimRng};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Selection {
    /// Execute the action with the largest estimate, least action on ties.
    Argmax,
    /// Execute the least action whose estimate is within the threshold of
    /// the largest.
    Delta(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RolloutConfig {
    pub width: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub selection: Selection,
}

impl RolloutConfig {
    pub fn new(width: usize, horizon: usize, gamma: f64) -> Self {
        RolloutConfig { width, horizon, gamma, selection: Selection::Argmax }
    }

    fn check(&self) {
        assert!(self.width >= 1, "sampling width must be at least 1");
        assert!(self.horizon >= 1, "horizon must be at least 1");
        assert!((0.0..=1.0).contains(&self.gamma), "discount must lie in [0, 1]");
    }
}

/// `⟨s, π(s), Q̂(s, a₁) … Q̂(s, a_m)⟩` with estimates keyed by the legal
/// actions of `s` in action order.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingExample<S, A> {
    pub state: S,
    pub prior: Option<A>,
    pub q: Vec<(A, f64)>,
}

impl<S, A: PartialEq> TrainingExample<S, A> {
    pub fn q_of(&self, a: &A) -> Option<f64> {
        self.q.iter().find(|(b, _)| b == a).map(|(_, v)| *v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<S, A> {
    pub examples: Vec<TrainingExample<S, A>>,
    /// Reward of each executed step.
    pub rewards: Vec<f64>,
    /// Discounted sum of `rewards`.
    pub value: f64,
    /// Whether the trajectory stopped in a terminal state.
    pub terminated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeltaSelection<A> {
    pub threshold: f64,
    /// Actions within `threshold` of the best estimate, in action order.
    pub selected: Vec<A>,
    pub chosen: A,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum RolloutError {
    #[error("no action estimates to select from")]
    Empty,
    #[error("training set line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("io: {0}")]
    Io(String),
}

/// Discounted return of following `policy` for `steps` steps from `s`,
/// with the first reward weighted by `gamma^first_power`. Stops at terminal
/// states.
pub fn simulate<M, P>(mdp: &M, policy: &P, s: M::State, steps: usize, gamma: f64, first_power: i32, rng: &mut SimRng) -> f64
where
    M: Simulator + ?Sized,
    P: Policy<M> + ?Sized,
{
    let mut s = s;
    let mut total = 0.0;
    let mut disc = gamma.powi(first_power);
    for _ in 0..steps {
        if mdp.is_terminal(&s) {
            break;
        }
        let Some(a) = policy.choose(mdp, &s, rng) else { break };
        let (next, r) = mdp.step(&s, &a, rng);
        total += disc * r;
        disc *= gamma;
        s = next;
    }
    total
}

/// Q̂(s, a) for every legal action: the average over `width` simulations of
/// taking `a` and then following `policy` for `horizon - 1` further steps.
pub fn policy_rollout<M, P>(mdp: &M, policy: &P, s: &M::State, cfg: &RolloutConfig, rng: &mut SimRng) -> Vec<(M::Action, f64)>
where
    M: Simulator + ?Sized,
    P: Policy<M> + ?Sized,
{
    cfg.check();
    let actions = mdp.legal_actions(s);
    if mdp.is_terminal(s) {
        return actions.into_iter().map(|a| (a, 0.0)).collect();
    }
    let rngs = fork_many(rng, actions.len());
    actions
        .into_par_iter()
        .zip(rngs)
        .map(|(a, mut r)| {
            // running mean, exact when every sample agrees
            let mut mean = 0.0;
            for k in 1..=cfg.width {
                let (next, reward) = mdp.step(s, &a, &mut r);
                let x = reward + simulate(mdp, policy, next, cfg.horizon - 1, cfg.gamma, 1, &mut r);
                mean += (x - mean) / k as f64;
            }
            (a, mean)
        })
        .collect()
}

/// `Â(Δ, s)` and its least member.
pub fn delta_action_select<A: Clone + Ord>(q: &[(A, f64)], delta: f64) -> Result<DeltaSelection<A>, RolloutError> {
    let max = q.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
    if q.is_empty() {
        return Err(RolloutError::Empty);
    }
    let mut selected: Vec<A> = q.iter().filter(|(_, v)| max - v <= delta).map(|(a, _)| a.clone()).collect();
    selected.sort();
    let chosen = selected[0].clone();
    Ok(DeltaSelection { threshold: delta, selected, chosen })
}

fn improved_action<A: Clone + Ord>(q: &[(A, f64)], selection: Selection) -> A {
    let delta = match selection {
        Selection::Argmax => 0.0,
        Selection::Delta(d) => d,
    };
    delta_action_select(q, delta).expect("non-empty estimates").chosen
}

/// One trajectory of the rollout-improved policy from `start`.
pub fn improved_trajectory<M, P>(mdp: &M, policy: &P, start: M::State, cfg: &RolloutConfig, rng: &mut SimRng) -> Trajectory<M::State, M::Action>
where
    M: Simulator + ?Sized,
    P: Policy<M> + ?Sized,
{
    cfg.check();
    let mut s = start;
    let mut examples = Vec::new();
    let mut rewards = Vec::new();
    let mut value = 0.0;
    let mut disc = 1.0;
    let mut terminated = false;
    for _ in 0..cfg.horizon {
        if mdp.is_terminal(&s) {
            terminated = true;
            break;
        }
        let q = policy_rollout(mdp, policy, &s, cfg, rng);
        if q.is_empty() {
            break;
        }
        let prior = policy.choose(mdp, &s, rng);
        let a = improved_action(&q, cfg.selection);
        examples.push(TrainingExample { state: s.clone(), prior, q });
        let (next, r) = mdp.step(&s, &a, rng);
        rewards.push(r);
        value += disc * r;
        disc *= cfg.gamma;
        s = next;
    }
    if !terminated && mdp.is_terminal(&s) {
        terminated = true;
    }
    Trajectory { examples, rewards, value, terminated }
}

/// `n` improved trajectories from independent initial draws. Results are in
/// trajectory order and identical for serial and parallel execution.
pub fn improved_trajectories<M, P, I>(mdp: &M, policy: &P, init: &I, n: usize, cfg: &RolloutConfig, rng: &mut SimRng) -> Vec<Trajectory<M::State, M::Action>>
where
    M: Simulator + ?Sized,
    P: Policy<M> + ?Sized,
    I: StateSampler<M> + ?Sized,
{
    fork_many(rng, n)
        .into_par_iter()
        .map(|mut r| {
            let s0 = init.sample(mdp, &mut r);
            improved_trajectory(mdp, policy, s0, cfg, &mut r)
        })
        .collect()
}

/// All examples of a set of trajectories, in order.
pub fn flatten<S: Clone, A: Clone>(trajs: &[Trajectory<S, A>]) -> Vec<TrainingExample<S, A>> {
    trajs.iter().flat_map(|t| t.examples.iter().cloned()).collect()
}

#[derive(Serialize, Deserialize)]
struct ExampleRecord {
    world: Vec<String>,
    goal: Vec<String>,
    prior: Option<String>,
    q: Vec<(String, f64)>,
}

/// Write examples as JSON lines.
pub fn write_training_set<W: Write>(
    mdp: &RelationalMdp,
    examples: &[TrainingExample<RelState, crate::mdp::GroundAction>],
    mut out: W,
) -> Result<(), RolloutError> {
    for ex in examples {
        let rec = ExampleRecord {
            world: ex.state.world().iter().map(|f| mdp.format_fact(f)).collect(),
            goal: ex.state.goal().iter().map(|f| mdp.format_fact(f)).collect(),
            prior: ex.prior.as_ref().map(|a| mdp.format_action(a)),
            q: ex.q.iter().map(|(a, v)| (mdp.format_action(a), *v)).collect(),
        };
        let line = serde_json::to_string(&rec).map_err(|e| RolloutError::Io(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| RolloutError::Io(e.to_string()))?;
    }
    Ok(())
}

/// Read examples written by [`write_training_set`]. Examples without
/// estimates are dropped.
pub fn read_training_set<R: BufRead>(
    mdp: &RelationalMdp,
    input: R,
) -> Result<Vec<TrainingExample<RelState, crate::mdp::GroundAction>>, RolloutError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| RolloutError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fmt = |message: String| RolloutError::Format { line: i + 1, message };
        let rec: ExampleRecord = serde_json::from_str(&line).map_err(|e| fmt(e.to_string()))?;
        let world = rec.world.iter().map(|f| mdp.parse_fact(f)).collect::<Result<Vec<_>, _>>()?;
        let goal = rec.goal.iter().map(|f| mdp.parse_fact(f)).collect::<Result<Vec<_>, _>>()?;
        let prior = rec.prior.as_deref().map(|a| mdp.parse_action(a)).transpose()?;
        let q = rec
            .q
            .iter()
            .map(|(a, v)| mdp.parse_action(a).map(|a| (a, *v)))
            .collect::<Result<Vec<_>, _>>()?;
        if q.is_empty() {
            continue;
        }
        out.push(TrainingExample { state: RelState::new(world, goal), prior, q });
    }
    Ok(out)
}
