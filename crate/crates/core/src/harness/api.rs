//! Approximate policy iteration and its random-walk bootstrapped driver.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::eval::{default_step_limit, draw_problems, evaluate_on, evaluate_policy, EvalReport};
use super::rw::{RandomWalkSampler, RwConfig, DEFAULT_NOOP_PROBABILITY};
use super::HarnessError;
use crate::learner::{learn_decision_list, LearnerConfig, TrainingSet, Vocabulary};
use crate::mdp::{GroundAction, Policy, RandomPolicy, RelState, RelationalMdp, StateSampler};
use crate::rng::{fork, SimRng};
use crate::rollout::{flatten, improved_trajectories, RolloutConfig};
use crate::taxonomy::DecisionList;

/// The random starting policy or a learned decision list.
#[derive(Clone, Debug, PartialEq)]
pub enum LearnedPolicy {
    Random,
    List(DecisionList),
}

impl LearnedPolicy {
    pub fn list(&self) -> Option<&DecisionList> {
        match self {
            LearnedPolicy::Random => None,
            LearnedPolicy::List(l) => Some(l),
        }
    }
}

impl Policy<RelationalMdp> for LearnedPolicy {
    fn choose(&self, mdp: &RelationalMdp, s: &RelState, rng: &mut SimRng) -> Option<GroundAction> {
        match self {
            LearnedPolicy::Random => RandomPolicy.choose(mdp, s, rng),
            LearnedPolicy::List(l) => l.choose(mdp, s, rng),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApiConfig {
    /// Trajectories drawn per improvement step.
    pub trajectories: usize,
    pub rollout: RolloutConfig,
    pub learner: LearnerConfig,
    /// Predicates whose goal and comparison forms may appear in rules; all
    /// when `None`.
    pub rule_goal_predicates: Option<Vec<String>>,
    pub max_iterations: usize,
    pub stop_patience: usize,
    /// Size of the held-out problem set.
    pub eval_samples: usize,
    pub step_limit: usize,
}

impl Default for ApiConfig {
    fn default() -> Self {
        ApiConfig {
            trajectories: 100,
            rollout: RolloutConfig::new(1, 50, 1.0),
            learner: LearnerConfig::default(),
            rule_goal_predicates: None,
            max_iterations: 10,
            stop_patience: 3,
            eval_samples: 100,
            step_limit: 200,
        }
    }
}

/// Statistics of one improvement step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub examples: usize,
    pub rules: usize,
    /// Mean discounted return of the rollout-improved trajectories.
    pub trajectory_value: f64,
    /// Fraction of trajectories that reached a goal.
    pub trajectory_success: f64,
}

/// One step: improved trajectories of `policy` from `source`, then a decision
/// list learned from their examples.
pub fn api_step<P, I>(
    mdp: &RelationalMdp,
    policy: &P,
    source: &I,
    cfg: &ApiConfig,
    rng: &mut SimRng,
) -> Result<(DecisionList, StepStats), HarnessError>
where
    P: Policy<RelationalMdp> + ?Sized,
    I: StateSampler<RelationalMdp> + ?Sized,
{
    let trajs = improved_trajectories(mdp, policy, source, cfg.trajectories, &cfg.rollout, rng);
    let examples = flatten(&trajs);
    let data = TrainingSet::new(mdp, &examples);
    let vocab = Vocabulary::for_mdp(mdp, cfg.rule_goal_predicates.as_deref());
    let list = learn_decision_list(&data, &vocab, &cfg.learner)?;
    let n = trajs.len().max(1) as f64;
    let stats = StepStats {
        examples: data.len(),
        rules: list.len(),
        trajectory_value: trajs.iter().map(|t| t.value).sum::<f64>() / n,
        trajectory_success: trajs.iter().filter(|t| t.terminated).count() as f64 / n,
    };
    Ok((list, stats))
}

#[derive(Clone, Debug)]
pub struct ApiOutcome {
    /// Best policy on the held-out set, the initial one included.
    pub best: LearnedPolicy,
    pub best_report: EvalReport,
    /// Held-out evaluation after each iteration.
    pub history: Vec<(StepStats, EvalReport)>,
}

/// Repeated improvement steps on problems from `source`, stopping after
/// `max_iterations` or `stop_patience` iterations without improvement on a
/// fixed held-out set.
pub fn api<I>(mdp: &RelationalMdp, source: &I, cfg: &ApiConfig, initial: LearnedPolicy, rng: &mut SimRng) -> Result<ApiOutcome, HarnessError>
where
    I: StateSampler<RelationalMdp> + ?Sized,
{
    let held_out = draw_problems(mdp, source, cfg.eval_samples, &mut fork(rng));
    let eval_seed = fork(rng);
    let eval = |p: &LearnedPolicy| evaluate_on(mdp, p, &held_out, cfg.step_limit, &mut eval_seed.clone());
    let mut best_report = eval(&initial);
    let mut best = initial.clone();
    let mut current = initial;
    let mut history = Vec::new();
    let mut stall = 0;
    for _ in 0..cfg.max_iterations {
        let (list, stats) = api_step(mdp, &current, source, cfg, &mut fork(rng))?;
        current = LearnedPolicy::List(list);
        let report = eval(&current);
        history.push((stats, report.clone()));
        if report.better_than(&best_report) {
            best_report = report;
            best = current.clone();
            stall = 0;
        } else {
            stall += 1;
            if stall >= cfg.stop_patience {
                break;
            }
        }
    }
    Ok(ApiOutcome { best, best_report, history })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrwConfig {
    /// Largest walk length `N`.
    pub max_walk: usize,
    pub initial_walk: usize,
    /// Success threshold `τ`.
    pub tau: f64,
    /// Margin `δ`.
    pub delta: f64,
    /// Problems per success-ratio estimate.
    pub sr_samples: usize,
    /// Ratio between successive walk lengths tried when escalating.
    pub grid_factor: f64,
    pub noop_probability: f64,
    /// Goal predicates of the random-walk problems.
    pub goal_predicates: Vec<String>,
    /// Fixed step limit; `max(4n, 200)` when `None`.
    pub step_limit: Option<usize>,
    /// Improvement-step settings. `max_iterations` and `stop_patience` bound
    /// the outer loop; the held-out set is drawn from `RW_N`.
    pub api: ApiConfig,
}

impl LrwConfig {
    pub fn new(goal_predicates: Vec<String>) -> Self {
        LrwConfig {
            max_walk: 10_000,
            initial_walk: 1,
            tau: 0.9,
            delta: 0.1,
            sr_samples: 100,
            grid_factor: 2.0,
            noop_probability: DEFAULT_NOOP_PROBABILITY,
            goal_predicates,
            step_limit: None,
            api: ApiConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(0.0 < self.delta && self.delta < self.tau && self.tau <= 1.0) {
            return Err(HarnessError::Config("need 0 < delta < tau <= 1".into()));
        }
        if self.max_walk == 0 || self.initial_walk == 0 || self.initial_walk > self.max_walk {
            return Err(HarnessError::Config("need 1 <= initial walk <= max walk".into()));
        }
        if self.grid_factor <= 1.0 {
            return Err(HarnessError::Config("grid factor must exceed 1".into()));
        }
        if self.sr_samples == 0 {
            return Err(HarnessError::Config("success-ratio sample count must be positive".into()));
        }
        self.api.learner.validate()?;
        Ok(())
    }

    fn step_limit(&self, n: usize) -> usize {
        self.step_limit.unwrap_or_else(|| default_step_limit(n))
    }

    fn rw(&self, n: usize) -> RwConfig {
        RwConfig { walk_length: n, noop_probability: self.noop_probability, goal_predicates: self.goal_predicates.clone() }
    }

    /// Walk lengths tried above `n`: `⌈n·f⌉, ⌈n·f²⌉, …` below `N`, then `N`.
    pub fn grid_above(&self, n: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut c = n as f64;
        loop {
            c = (c * self.grid_factor).ceil();
            if c >= self.max_walk as f64 {
                break;
            }
            if out.last() != Some(&(c as usize)) && c as usize > n {
                out.push(c as usize);
            }
        }
        if n < self.max_walk {
            out.push(self.max_walk);
        }
        out
    }
}

/// One row of the iteration report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: usize,
    pub walk_length: usize,
    pub examples: usize,
    pub rules: usize,
    pub sr_walk: f64,
    pub al_walk: Option<f64>,
    pub sr_max_walk: f64,
    pub al_max_walk: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct LrwOutcome {
    pub final_policy: LearnedPolicy,
    /// Best policy on the held-out `RW_N` set.
    pub best: LearnedPolicy,
    pub best_report: Option<EvalReport>,
    pub reports: Vec<IterationReport>,
}

/// Random-walk bootstrapped API from the random policy. `on_iteration` sees
/// each report row as soon as it is produced.
pub fn lrw_api<I>(
    mdp: &RelationalMdp,
    initial: &I,
    cfg: &LrwConfig,
    rng: &mut SimRng,
    on_iteration: &mut dyn FnMut(&IterationReport) -> Result<(), HarnessError>,
) -> Result<LrwOutcome, HarnessError>
where
    I: StateSampler<RelationalMdp> + Clone,
{
    cfg.validate()?;
    cfg.rw(1).validate(mdp)?;
    let sampler = |n: usize| RandomWalkSampler { initial: initial.clone(), config: cfg.rw(n) };
    let big = sampler(cfg.max_walk);
    let held_out = draw_problems(mdp, &big, cfg.api.eval_samples, &mut fork(rng));
    let big_limit = cfg.step_limit(cfg.max_walk);

    let mut policy = LearnedPolicy::Random;
    let mut n = cfg.initial_walk;
    let mut best: Option<(LearnedPolicy, EvalReport)> = None;
    let mut reports = Vec::new();
    let mut stall = 0;
    for iteration in 1..=cfg.api.max_iterations {
        let est = evaluate_policy(mdp, &policy, &sampler(n), cfg.sr_samples, cfg.step_limit(n), &mut fork(rng));
        if est.success_ratio > cfg.tau {
            let mut next = cfg.max_walk;
            for c in cfg.grid_above(n) {
                let sr = evaluate_policy(mdp, &policy, &sampler(c), cfg.sr_samples, cfg.step_limit(c), &mut fork(rng));
                if sr.success_ratio < cfg.tau - cfg.delta {
                    next = c;
                    break;
                }
            }
            n = next.max(n);
        }
        let (list, stats) = api_step(mdp, &policy, &sampler(n), &cfg.api, &mut fork(rng))?;
        policy = LearnedPolicy::List(list);
        let at_n = evaluate_policy(mdp, &policy, &sampler(n), cfg.sr_samples, cfg.step_limit(n), &mut fork(rng));
        let at_big = evaluate_on(mdp, &policy, &held_out, big_limit, &mut fork(rng));
        let row = IterationReport {
            iteration,
            walk_length: n,
            examples: stats.examples,
            rules: stats.rules,
            sr_walk: at_n.success_ratio,
            al_walk: at_n.average_length,
            sr_max_walk: at_big.success_ratio,
            al_max_walk: at_big.average_length,
        };
        on_iteration(&row)?;
        reports.push(row);
        let improved = best.as_ref().is_none_or(|(_, r)| at_big.better_than(r));
        if improved {
            best = Some((policy.clone(), at_big));
        }
        if n == cfg.max_walk {
            if improved {
                stall = 0;
            } else {
                stall += 1;
                if stall >= cfg.api.stop_patience {
                    break;
                }
            }
        }
    }
    let (best_policy, best_report) = match best {
        Some((p, r)) => (p, Some(r)),
        None => (policy.clone(), None),
    };
    Ok(LrwOutcome { final_policy: policy, best: best_policy, best_report, reports })
}

/// Append-only CSV writer for iteration reports.
pub struct ReportWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> ReportWriter<W> {
    pub fn new(out: W) -> Self {
        ReportWriter { inner: csv::Writer::from_writer(out) }
    }

    pub fn write(&mut self, row: &IterationReport) -> Result<(), HarnessError> {
        self.inner.serialize(row).map_err(|e| HarnessError::Io(e.to_string()))?;
        self.inner.flush().map_err(|e| HarnessError::Io(e.to_string()))
    }
}
