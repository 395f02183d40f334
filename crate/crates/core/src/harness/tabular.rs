//! Explicit finite MDPs and exact dynamic-programming oracles.

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use serde::Serialize;

use super::HarnessError;
use crate::mdp::{GroundAction, Policy, RelState, RelationalMdp, Simulator};
use crate::rng::SimRng;

pub const DEFAULT_STATE_CAP: usize = 200_000;

/// Values closer than this count as equal when comparing Q-values.
pub const VALUE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TabularMdp {
    /// `transitions[s][a]` lists `(next state, probability)`.
    pub transitions: Vec<Vec<Vec<(usize, f64)>>>,
    /// `rewards[s][a]`.
    pub rewards: Vec<Vec<f64>>,
    /// Absorbing zero-reward states.
    pub terminal: Vec<bool>,
}

impl TabularMdp {
    pub fn state_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn action_count(&self, s: usize) -> usize {
        self.transitions[s].len()
    }

    pub fn max_actions(&self) -> usize {
        self.transitions.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `R_max = max |R(s, a)|`.
    pub fn r_max(&self) -> f64 {
        self.rewards.iter().flatten().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// A deterministic MDP: `next[s][a]` with reward `rewards[s][a]`.
    pub fn deterministic(next: Vec<Vec<usize>>, rewards: Vec<Vec<f64>>) -> Self {
        let n = next.len();
        TabularMdp {
            transitions: next.into_iter().map(|row| row.into_iter().map(|t| vec![(t, 1.0)]).collect()).collect(),
            rewards,
            terminal: vec![false; n],
        }
    }

    /// Expected value of `v` after taking `a` in `s`.
    fn expect(&self, s: usize, a: usize, v: &[f64]) -> f64 {
        self.transitions[s][a].iter().map(|&(t, p)| p * v[t]).sum()
    }
}

impl Simulator for TabularMdp {
    type State = usize;
    type Action = usize;

    fn legal_actions(&self, s: &usize) -> Vec<usize> {
        (0..self.action_count(*s)).collect()
    }

    fn step(&self, s: &usize, a: &usize, rng: &mut SimRng) -> (usize, f64) {
        if self.terminal[*s] {
            return (*s, 0.0);
        }
        let outs = &self.transitions[*s][*a];
        if outs.len() == 1 {
            return (outs[0].0, self.rewards[*s][*a]);
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for &(t, p) in outs {
            acc += p;
            if u < acc {
                return (t, self.rewards[*s][*a]);
            }
        }
        (outs.last().unwrap().0, self.rewards[*s][*a])
    }

    fn is_terminal(&self, s: &usize) -> bool {
        self.terminal[*s]
    }
}

/// A stationary deterministic policy given by a table.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct TabularPolicy(pub Vec<usize>);

impl Policy<TabularMdp> for TabularPolicy {
    fn choose(&self, mdp: &TabularMdp, s: &usize, _rng: &mut SimRng) -> Option<usize> {
        (mdp.action_count(*s) > 0).then(|| self.0[*s])
    }
}

/// A random MDP with `states` states, `actions` actions per state, up to
/// `branching` successors per action and rewards uniform in `[-1, 0]`.
pub fn random_mdp(states: usize, actions: usize, branching: usize, rng: &mut SimRng) -> TabularMdp {
    assert!(states > 0 && actions > 0 && branching > 0);
    let mut transitions = Vec::with_capacity(states);
    let mut rewards = Vec::with_capacity(states);
    for _ in 0..states {
        let mut row = Vec::with_capacity(actions);
        let mut rrow = Vec::with_capacity(actions);
        for _ in 0..actions {
            let k = rng.gen_range(1..=branching);
            let mut weights: Vec<(usize, f64)> = (0..k).map(|_| (rng.gen_range(0..states), rng.gen_range(0.05..1.0))).collect();
            let total: f64 = weights.iter().map(|w| w.1).sum();
            for w in &mut weights {
                w.1 /= total;
            }
            row.push(weights);
            rrow.push(-rng.gen::<f64>());
        }
        transitions.push(row);
        rewards.push(rrow);
    }
    TabularMdp { transitions, rewards, terminal: vec![false; states] }
}

/// Exact tables for a policy on a tabular MDP.
#[derive(Clone, Debug, Serialize)]
pub struct ExactSolution {
    pub gamma: f64,
    pub horizon: usize,
    pub policy: Vec<usize>,
    /// Infinite-horizon `V^π` and `Q^π`; empty when `gamma >= 1`.
    pub v: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    /// `V_k^π` for `k = 0..=horizon`.
    pub v_h: Vec<Vec<f64>>,
    /// `Q_h^π` at the final horizon.
    pub q_h: Vec<Vec<f64>>,
    /// Greedy improvement of `π` w.r.t. `Q^π` (or `Q_h^π` when `gamma >= 1`),
    /// least action on ties.
    pub improved: Vec<usize>,
    pub r_max: f64,
    /// `R_max / (1 - γ)`, infinite when `gamma >= 1`.
    pub v_max: f64,
    /// Smallest gap between the best and second-best distinct Q-values,
    /// `None` when every state has a single Q-value.
    pub delta_star: Option<f64>,
}

impl ExactSolution {
    /// The policy's optimal action set at `s`: actions whose Q-value is within
    /// tolerance of the maximum.
    pub fn greedy_set(&self, s: usize) -> Vec<usize> {
        let q = if self.q.is_empty() { &self.q_h[s] } else { &self.q[s] };
        greedy_set(q)
    }
}

fn greedy_set(q: &[f64]) -> Vec<usize> {
    let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..q.len()).filter(|&a| max - q[a] <= VALUE_TOLERANCE * max.abs().max(1.0)).collect()
}

/// `V^π` by iterative evaluation until successive sweeps differ by less than
/// `tol · (1 − γ)`, which bounds the error by `tol`.
pub fn evaluate_exact(mdp: &TabularMdp, policy: &[usize], gamma: f64, tol: f64) -> Vec<f64> {
    assert!(gamma < 1.0, "infinite-horizon evaluation needs gamma < 1");
    let n = mdp.state_count();
    let mut v = vec![0.0; n];
    let stop = tol * (1.0 - gamma);
    loop {
        let mut diff: f64 = 0.0;
        let next: Vec<f64> = (0..n)
            .map(|s| {
                if mdp.terminal[s] || mdp.action_count(s) == 0 {
                    0.0
                } else {
                    let a = policy[s];
                    mdp.rewards[s][a] + gamma * mdp.expect(s, a, &v)
                }
            })
            .collect();
        for (x, y) in next.iter().zip(&v) {
            diff = diff.max((x - y).abs());
        }
        v = next;
        if diff < stop {
            return v;
        }
    }
}

/// `Q(s, a) = R(s, a) + γ E[V(T(s, a))]`, zero at terminal states.
pub fn q_from_v(mdp: &TabularMdp, v: &[f64], gamma: f64) -> Vec<Vec<f64>> {
    (0..mdp.state_count())
        .map(|s| {
            (0..mdp.action_count(s))
                .map(|a| if mdp.terminal[s] { 0.0 } else { mdp.rewards[s][a] + gamma * mdp.expect(s, a, v) })
                .collect()
        })
        .collect()
}

/// `V_0 ≡ 0`, `V_k(s) = Q_k(s, π(s))`. Returns `V_0..=V_h` and `Q_h`.
pub fn finite_horizon(mdp: &TabularMdp, policy: &[usize], gamma: f64, h: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = mdp.state_count();
    let mut vs = vec![vec![0.0; n]];
    let mut q = q_from_v(mdp, &vs[0], gamma);
    if h == 0 {
        return (vs, q.iter().map(|r| vec![0.0; r.len()]).collect());
    }
    for _ in 1..=h {
        q = q_from_v(mdp, vs.last().unwrap(), gamma);
        let v: Vec<f64> = (0..n).map(|s| if mdp.action_count(s) == 0 { 0.0 } else { q[s][policy[s]] }).collect();
        vs.push(v);
    }
    (vs, q)
}

/// `argmax_a Q(s, a)` per state, least action on ties.
pub fn improve(q: &[Vec<f64>]) -> Vec<usize> {
    q.iter().map(|row| greedy_set(row).first().copied().unwrap_or(0)).collect()
}

/// `min_{s ∈ S′} (Q(s, a₁*) − Q(s, a₂*))` over states with distinct Q-values.
pub fn q_advantage_gap(q: &[Vec<f64>]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for row in q {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = VALUE_TOLERANCE * max.abs().max(1.0);
        let second = row.iter().copied().filter(|&x| max - x > tol).fold(f64::NEG_INFINITY, f64::max);
        if second.is_finite() {
            let gap = max - second;
            best = Some(best.map_or(gap, |b: f64| b.min(gap)));
        }
    }
    best
}

/// Exact tables for `policy` (the least action everywhere when `None`).
pub fn exact_solve(mdp: &TabularMdp, policy: Option<&[usize]>, gamma: f64, h: usize) -> ExactSolution {
    let pi: Vec<usize> = match policy {
        Some(p) => p.to_vec(),
        None => vec![0; mdp.state_count()],
    };
    let (v_h, q_h) = finite_horizon(mdp, &pi, gamma, h);
    let (v, q) = if gamma < 1.0 {
        let v = evaluate_exact(mdp, &pi, gamma, 1e-12);
        let q = q_from_v(mdp, &v, gamma);
        (v, q)
    } else {
        (Vec::new(), Vec::new())
    };
    let basis = if q.is_empty() { &q_h } else { &q };
    let improved = improve(basis);
    let delta_star = q_advantage_gap(basis);
    let r_max = mdp.r_max();
    let v_max = if gamma < 1.0 { r_max / (1.0 - gamma) } else { f64::INFINITY };
    ExactSolution { gamma, horizon: h, policy: pi, v, q, v_h, q_h, improved, r_max, v_max, delta_star }
}

/// The reachable state space of a relational MDP as a tabular MDP, with the
/// ground action labels of each state. State 0.. are the `starts` in order.
pub struct Enumerated {
    pub mdp: TabularMdp,
    pub states: Vec<RelState>,
    pub actions: Vec<Vec<GroundAction>>,
}

impl Enumerated {
    pub fn index_of(&self, s: &RelState) -> Option<usize> {
        self.states.iter().position(|x| x == s)
    }

    /// Table of a relational policy over the enumerated states.
    pub fn tabulate<P: Policy<RelationalMdp>>(&self, rmdp: &RelationalMdp, policy: &P, rng: &mut SimRng) -> Vec<usize> {
        self.states
            .iter()
            .zip(&self.actions)
            .map(|(s, acts)| match policy.choose(rmdp, s, rng) {
                Some(a) => acts.iter().position(|b| *b == a).unwrap_or(0),
                None => 0,
            })
            .collect()
    }
}

/// Breadth-first enumeration from `starts`, failing above `cap` states.
pub fn enumerate_relational(mdp: &RelationalMdp, starts: &[RelState], cap: usize) -> Result<Enumerated, HarnessError> {
    let mut index: HashMap<RelState, usize> = HashMap::new();
    let mut states: Vec<RelState> = Vec::new();
    let mut queue = VecDeque::new();
    let intern = |s: RelState, index: &mut HashMap<RelState, usize>, states: &mut Vec<RelState>, queue: &mut VecDeque<usize>| -> Result<usize, HarnessError> {
        if let Some(&i) = index.get(&s) {
            return Ok(i);
        }
        if states.len() >= cap {
            return Err(HarnessError::StateCap(cap));
        }
        let i = states.len();
        index.insert(s.clone(), i);
        states.push(s);
        queue.push_back(i);
        Ok(i)
    };
    for s in starts {
        intern(s.clone(), &mut index, &mut states, &mut queue)?;
    }
    let mut transitions: Vec<Vec<Vec<(usize, f64)>>> = Vec::new();
    let mut rewards: Vec<Vec<f64>> = Vec::new();
    let mut terminal = Vec::new();
    let mut actions = Vec::new();
    while let Some(i) = queue.pop_front() {
        let s = states[i].clone();
        let goal = s.is_goal_state();
        let acts = mdp.legal_actions(&s);
        let mut row = Vec::with_capacity(acts.len());
        let mut rrow = Vec::with_capacity(acts.len());
        for a in &acts {
            if goal {
                row.push(vec![(i, 1.0)]);
                rrow.push(0.0);
                continue;
            }
            let mut outs: Vec<(usize, f64)> = Vec::new();
            for o in &mdp.schema(a.schema).outcomes {
                if o.probability <= 0.0 {
                    continue;
                }
                let t = intern(mdp.apply_outcome(&s, a, o), &mut index, &mut states, &mut queue)?;
                match outs.iter_mut().find(|x| x.0 == t) {
                    Some(x) => x.1 += o.probability,
                    None => outs.push((t, o.probability)),
                }
            }
            row.push(outs);
            rrow.push(-mdp.cost(a));
        }
        // Rows are filled in BFS order, which is index order.
        debug_assert_eq!(transitions.len(), i);
        transitions.push(row);
        rewards.push(rrow);
        terminal.push(goal);
        actions.push(acts);
    }
    Ok(Enumerated { mdp: TabularMdp { transitions, rewards, terminal }, states, actions })
}
