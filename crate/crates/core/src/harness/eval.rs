//! Success ratio and average length of a policy on a problem distribution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mdp::{Policy, RelState, RelationalMdp, Simulator, StateSampler};
use crate::rng::{fork_many, SimRng};

/// Default step limit for a walk length `n`.
pub fn default_step_limit(n: usize) -> usize {
    (4 * n).max(200)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub success_ratio: f64,
    /// Mean accumulated cost of solved episodes; `None` when none was solved.
    pub average_length: Option<f64>,
    pub samples: usize,
    pub step_limit: usize,
}

impl EvalReport {
    /// Higher success ratio, then lower average length.
    pub fn better_than(&self, other: &EvalReport) -> bool {
        if self.success_ratio != other.success_ratio {
            return self.success_ratio > other.success_ratio;
        }
        match (self.average_length, other.average_length) {
            (Some(a), Some(b)) => a < b,
            _ => false,
        }
    }
}

/// Outcome of running a policy on one problem: the accumulated cost when a
/// goal state was reached within `step_limit` steps.
pub fn run_episode<P>(mdp: &RelationalMdp, policy: &P, s: RelState, step_limit: usize, rng: &mut SimRng) -> Option<f64>
where
    P: Policy<RelationalMdp> + ?Sized,
{
    let mut s = s;
    let mut cost = 0.0;
    for _ in 0..step_limit {
        if s.is_goal_state() {
            return Some(cost);
        }
        let a = policy.choose(mdp, &s, rng)?;
        let (next, r) = mdp.step(&s, &a, rng);
        cost -= r;
        s = next;
    }
    s.is_goal_state().then_some(cost)
}

/// Evaluate on an explicit list of problems.
pub fn evaluate_on<P>(mdp: &RelationalMdp, policy: &P, problems: &[RelState], step_limit: usize, rng: &mut SimRng) -> EvalReport
where
    P: Policy<RelationalMdp> + ?Sized,
{
    assert!(step_limit >= 1, "step limit must be at least 1");
    let outcomes: Vec<Option<f64>> = problems
        .par_iter()
        .zip(fork_many(rng, problems.len()))
        .map(|(s, mut r)| run_episode(mdp, policy, s.clone(), step_limit, &mut r))
        .collect();
    let solved: Vec<f64> = outcomes.into_iter().flatten().collect();
    let samples = problems.len();
    EvalReport {
        success_ratio: if samples == 0 { 0.0 } else { solved.len() as f64 / samples as f64 },
        average_length: (!solved.is_empty()).then(|| solved.iter().sum::<f64>() / solved.len() as f64),
        samples,
        step_limit,
    }
}

/// Draw `samples` problems from `source`, in order.
pub fn draw_problems<I>(mdp: &RelationalMdp, source: &I, samples: usize, rng: &mut SimRng) -> Vec<RelState>
where
    I: StateSampler<RelationalMdp> + ?Sized,
{
    fork_many(rng, samples).into_par_iter().map(|mut r| source.sample(mdp, &mut r)).collect()
}

/// `SR` and `AL` of `policy` on `samples` problems drawn from `source`.
pub fn evaluate_policy<P, I>(mdp: &RelationalMdp, policy: &P, source: &I, samples: usize, step_limit: usize, rng: &mut SimRng) -> EvalReport
where
    P: Policy<RelationalMdp> + ?Sized,
    I: StateSampler<RelationalMdp> + ?Sized,
{
    let problems = draw_problems(mdp, source, samples, rng);
    evaluate_on(mdp, policy, &problems, step_limit, rng)
}
