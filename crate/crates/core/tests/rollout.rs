mod common;

use common::{builtin_mdp, state};
use lrw_core::harness::{exact_solve, finite_horizon, random_mdp, GeneratorSampler, GeneratorSpec, TabularMdp, TabularPolicy};
use lrw_core::mdp::{FixedState, LeastActionPolicy, RandomPolicy, Simulator};
use lrw_core::rng::seeded;
use lrw_core::rollout::{
    flatten, improved_trajectories, improved_trajectory, policy_rollout, read_training_set, write_training_set,
    RolloutConfig, Selection,
};

/// Five states in a row; action 0 moves right, action 1 moves left. The last
/// state is absorbing.
fn chain() -> TabularMdp {
    let next = vec![vec![1, 0], vec![2, 0], vec![3, 1], vec![4, 2], vec![4, 4]];
    let rewards = vec![vec![-1.0, -0.5], vec![-2.0, -0.25], vec![-1.0, -3.0], vec![-0.5, -1.0], vec![0.0, 0.0]];
    let mut m = TabularMdp::deterministic(next, rewards);
    m.terminal[4] = true;
    m
}

/// A stochastic chain where advancing sometimes slips and jumping is risky.
fn slippery_chain() -> TabularMdp {
    let mut transitions = Vec::new();
    for s in 0..5 {
        if s == 4 {
            transitions.push(vec![vec![(4, 1.0)], vec![(4, 1.0)]]);
            continue;
        }
        let advance = vec![(s + 1, 0.8), (s, 0.2)];
        let jump = vec![((s + 2).min(4), 0.5), (0, 0.5)];
        transitions.push(vec![advance, jump]);
    }
    let rewards = vec![vec![-1.0; 2]; 5];
    let mut terminal = vec![false; 5];
    terminal[4] = true;
    TabularMdp { transitions, rewards, terminal }
}

#[test]
fn horizon_one_is_the_immediate_reward() {
    let mdp = random_mdp(6, 3, 3, &mut seeded(1));
    let pi = TabularPolicy(vec![0; 6]);
    for s in 0..6 {
        for w in [1, 7] {
            let q = policy_rollout(&mdp, &pi, &s, &RolloutConfig::new(w, 1, 0.9), &mut seeded(s as u64));
            for (a, v) in q {
                assert_eq!(v, mdp.rewards[s][a]);
            }
        }
    }
}

#[test]
fn goal_states_estimate_zero() {
    let mdp = builtin_mdp("blocks", &["a", "b"]);
    let s = state(&mdp, &["(handempty)", "(on-table a)", "(on-table b)", "(clear a)", "(clear b)"], &["(clear a)"]);
    let q = policy_rollout(&mdp, &RandomPolicy, &s, &RolloutConfig::new(4, 10, 1.0), &mut seeded(0));
    assert_eq!(q.len(), 2);
    assert!(q.iter().all(|(_, v)| *v == 0.0));
}

#[test]
fn deterministic_chain_matches_finite_horizon_recursion() {
    let mdp = chain();
    let policies = [vec![0, 0, 0, 0, 0], vec![1, 0, 1, 0, 0], vec![0, 1, 1, 1, 0]];
    for pi in policies {
        for (gamma, h) in [(1.0, 6), (0.9, 7), (0.5, 3)] {
            let (_, q_h) = finite_horizon(&mdp, &pi, gamma, h);
            for s in 0..5 {
                let q = policy_rollout(&mdp, &TabularPolicy(pi.clone()), &s, &RolloutConfig::new(1, h, gamma), &mut seeded(3));
                for (a, v) in q {
                    assert!((v - q_h[s][a]).abs() <= 1e-12, "s={s} a={a} {v} vs {}", q_h[s][a]);
                }
            }
        }
    }
}

#[test]
fn estimates_are_unbiased() {
    let mut rng = seeded(21);
    let mdp = random_mdp(8, 3, 3, &mut rng);
    let pi: Vec<usize> = (0..8).map(|s| s % 3).collect();
    let (gamma, h, w) = (0.9, 10, 4);
    let exact = exact_solve(&mdp, Some(&pi), gamma, h);
    let cfg = RolloutConfig::new(w, h, gamma);
    let tol = 3.0 * exact.v_max / ((1000 * w) as f64).sqrt();
    for s in [0, 3, 7] {
        let mut sums = vec![0.0; 3];
        for _ in 0..1000 {
            for (a, v) in policy_rollout(&mdp, &TabularPolicy(pi.clone()), &s, &cfg, &mut rng) {
                sums[a] += v;
            }
        }
        for a in 0..3 {
            let mean = sums[a] / 1000.0;
            assert!((mean - exact.q_h[s][a]).abs() <= tol, "s={s} a={a} {mean} vs {}", exact.q_h[s][a]);
        }
    }
}

#[test]
fn finite_horizon_error_bound() {
    let mut rng = seeded(8);
    for _ in 0..10 {
        let mdp = random_mdp(10, 3, 4, &mut rng);
        let pi = vec![1; 10];
        for h in [1, 4, 12] {
            let ex = exact_solve(&mdp, Some(&pi), 0.8, h);
            let bound = 0.8f64.powi(h as i32) * ex.v_max;
            for s in 0..10 {
                for a in 0..3 {
                    assert!((ex.q[s][a] - ex.q_h[s][a]).abs() <= bound + 1e-9);
                }
            }
        }
    }
}

#[test]
fn rollout_argmax_tracks_exact_improvement() {
    let mdp = slippery_chain();
    let pi = vec![1, 1, 1, 1, 0];
    let h = 6;
    let exact = exact_solve(&mdp, Some(&pi), 1.0, h);
    let cfg = RolloutConfig::new(256, h, 1.0);
    let mut rng = seeded(4);
    for s in 0..4 {
        let row = &exact.q_h[s];
        assert!((row[0] - row[1]).abs() > 0.3, "state {s} gap too small for this check: {row:?}");
        let mut agree = 0;
        for _ in 0..200 {
            let q = policy_rollout(&mdp, &TabularPolicy(pi.clone()), &s, &cfg, &mut rng);
            let best = lrw_core::rollout::delta_action_select(&q, 0.0).unwrap().chosen;
            agree += usize::from(best == exact.improved[s]);
        }
        assert!(agree >= 190, "state {s}: {agree}/200");
    }
}

#[test]
fn improved_trajectory_shape() {
    let spec: GeneratorSpec = "blocks:4".parse().unwrap();
    let mdp = spec.mdp();
    let cfg = RolloutConfig::new(2, 5, 1.0);
    let trajs = improved_trajectories(&mdp, &RandomPolicy, &GeneratorSampler(spec), 3, &cfg, &mut seeded(12));
    assert_eq!(trajs.len(), 3);
    for t in &trajs {
        assert!(t.examples.len() <= 5);
        assert_eq!(t.rewards.len(), t.examples.len());
        let v: f64 = t.rewards.iter().sum();
        assert_eq!(t.value, v);
        for (i, ex) in t.examples.iter().enumerate() {
            let legal = mdp.legal_actions(&ex.state);
            let keys: Vec<_> = ex.q.iter().map(|(a, _)| a.clone()).collect();
            assert_eq!(keys, legal);
            assert!(legal.contains(ex.prior.as_ref().unwrap()));
            // the executed action is the least maximizer of the estimates
            let max = ex.q.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
            let chosen = ex.q.iter().find(|(_, v)| *v == max).unwrap().0.clone();
            if let Some(next) = t.examples.get(i + 1) {
                let after = mdp.world_step(&ex.state, &chosen, &mut seeded(0));
                assert_eq!(after, next.state);
            }
        }
    }
}

#[test]
fn discounted_value_matches_rewards() {
    let mdp = slippery_chain();
    let mut cfg = RolloutConfig::new(3, 8, 0.7);
    cfg.selection = Selection::Delta(0.5);
    let t = improved_trajectory(&mdp, &TabularPolicy(vec![0; 5]), 0, &cfg, &mut seeded(2));
    let v: f64 = t.rewards.iter().enumerate().map(|(i, r)| 0.7f64.powi(i as i32) * r).sum();
    assert!((t.value - v).abs() < 1e-12);
}

#[test]
fn trajectories_are_reproducible() {
    let spec: GeneratorSpec = "gripper:2".parse().unwrap();
    let mdp = spec.mdp();
    let cfg = RolloutConfig::new(2, 6, 1.0);
    let run = |seed| improved_trajectories(&mdp, &RandomPolicy, &GeneratorSampler(spec), 4, &cfg, &mut seeded(seed));
    assert_eq!(run(9), run(9));
    let tab = slippery_chain();
    let a = policy_rollout(&tab, &LeastActionPolicy, &0, &RolloutConfig::new(5, 5, 1.0), &mut seeded(1));
    let b = policy_rollout(&tab, &LeastActionPolicy, &0, &RolloutConfig::new(5, 5, 1.0), &mut seeded(1));
    assert_eq!(a, b);
}

#[test]
fn training_set_round_trip() {
    let spec: GeneratorSpec = "blocks:3".parse().unwrap();
    let mdp = spec.mdp();
    let trajs = improved_trajectories(&mdp, &RandomPolicy, &GeneratorSampler(spec), 2, &RolloutConfig::new(1, 4, 1.0), &mut seeded(3));
    let examples = flatten(&trajs);
    assert!(!examples.is_empty());
    let mut buf = Vec::new();
    write_training_set(&mdp, &examples, &mut buf).unwrap();
    assert_eq!(String::from_utf8_lossy(&buf).lines().count(), examples.len());
    let back = read_training_set(&mdp, buf.as_slice()).unwrap();
    assert_eq!(back, examples);
    let err = read_training_set(&mdp, "{\"world\": 3}\n".as_bytes()).unwrap_err();
    assert!(err.to_string().contains("line 1"));
}

#[test]
fn fixed_start_state_sampler() {
    let mdp = chain();
    let trajs = improved_trajectories(&mdp, &LeastActionPolicy, &FixedState(2usize), 2, &RolloutConfig::new(1, 5, 1.0), &mut seeded(0));
    assert!(trajs.iter().all(|t| t.examples[0].state == 2 && t.terminated));
}
