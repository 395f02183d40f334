mod common;

use common::{fixture, text_mdp};
use lrw_core::harness::{evaluate_on, GeneratorSampler, GeneratorSpec};
use lrw_core::learner::{
    beam_search, covers, hvalue, learn_decision_list, learn_rule, q_advantage, LabeledExample, LearnError, LearnerConfig,
    RuleSearch, TrainingSet, Vocabulary,
};
use lrw_core::mdp::{GroundAction, RelState, RelationalMdp, Simulator};
use lrw_core::parser::parse_policy_for;
use lrw_core::rng::seeded;
use lrw_core::rollout::{flatten, improved_trajectories, TrainingExample, RolloutConfig};
use lrw_core::taxonomy::{enumerate_literals, DecisionList, Literal, Rule, DEFAULT_ENUMERATION_CAP};
use proptest::prelude::*;
use rand::Rng;

const PICK: &str = "(define (domain pick)
  (:predicates (clear ?x) (p ?x) (r ?x ?y))
  (:action a :parameters (?x) :precondition (and) :effect (p ?x))
  (:action b :parameters (?x) :precondition (and) :effect (clear ?x)))";

fn pick_mdp() -> RelationalMdp {
    text_mdp(PICK, &["o1", "o2", "o3"])
}

fn act(mdp: &RelationalMdp, s: &str) -> GroundAction {
    mdp.parse_action(s).unwrap()
}

fn example(mdp: &RelationalMdp, world: &[&str], q: &[(&str, f64)], prior: &str) -> TrainingExample<RelState, GroundAction> {
    TrainingExample {
        state: common::state(mdp, world, &[]),
        prior: Some(act(mdp, prior)),
        q: q.iter().map(|(a, v)| (act(mdp, a), *v)).collect(),
    }
}

fn world_only(mdp: &RelationalMdp) -> Vocabulary {
    Vocabulary::for_mdp(mdp, Some(&[]))
}

/// Straight-line reimplementation of the heuristic.
fn naive_hvalue(rule: &Rule, d: &TrainingSet) -> f64 {
    let mut h = 0.0;
    for ex in d.examples() {
        let allowed: Vec<f64> = (0..ex.actions.len())
            .filter(|&i| {
                let a = &ex.actions[i];
                a.schema == rule.action
                    && rule.literals.iter().all(|l| {
                        lrw_core::taxonomy::interpret_class(&l.expr, &ex.view, d.object_count(), &a.args)
                            .unwrap()
                            .contains(a.args[l.var])
                    })
            })
            .map(|i| ex.advantages[i])
            .collect();
        if !allowed.is_empty() {
            h += 1.0;
            for v in allowed {
                h += v;
            }
        }
    }
    h
}

#[test]
fn advantage_examples() {
    let mdp = pick_mdp();
    let ex = example(&mdp, &[], &[("(a o1)", -5.0), ("(a o2)", -3.0)], "(a o1)");
    assert_eq!(q_advantage(&ex, &act(&mdp, "(a o1)")).unwrap(), 0.0);
    assert_eq!(q_advantage(&ex, &act(&mdp, "(a o2)")).unwrap(), 2.0);
    let flipped = TrainingExample { prior: Some(act(&mdp, "(a o2)")), ..ex.clone() };
    assert_eq!(q_advantage(&flipped, &act(&mdp, "(a o1)")).unwrap(), -2.0);
    assert!(matches!(q_advantage(&ex, &act(&mdp, "(b o1)")), Err(LearnError::NotLegal(_))));
}

#[test]
fn hvalue_examples() {
    let mdp = pick_mdp();
    let cfg = LearnerConfig::default();
    let ex = example(&mdp, &["(clear o1)", "(clear o2)"], &[("(a o1)", 0.0), ("(a o2)", -3.0), ("(a o3)", -2.0)], "(a o3)");
    let d = TrainingSet::new(&mdp, &[ex]);
    // advantages +2 and -1 on the clear blocks, 0 on the prior
    assert_eq!(d.examples()[0].advantages, vec![2.0, -1.0, 0.0]);
    let clear = parse_policy_for("a: (x1 in clear)", &mdp).unwrap().rules()[0].clone();
    let r = hvalue(&clear, &d, &cfg);
    assert_eq!((r.hvalue, r.covered), (2.0, 1));
    let none = parse_policy_for("a: (x1 in (not a-thing))", &mdp).unwrap().rules()[0].clone();
    assert_eq!(hvalue(&none, &d, &cfg).hvalue, 0.0);
    assert_eq!(hvalue(&none, &d, &cfg).covered, 0);
    assert_eq!(hvalue(&Rule::empty(act(&mdp, "(b o1)").schema), &d, &cfg).covered, 0);
}

fn three_examples(mdp: &RelationalMdp) -> Vec<TrainingExample<RelState, GroundAction>> {
    vec![
        example(mdp, &["(clear o1)", "(p o2)", "(r o2 o3)"], &[("(a o1)", -1.0), ("(a o2)", -3.0), ("(a o3)", -4.0), ("(b o1)", -2.5)], "(a o2)"),
        example(mdp, &["(clear o2)", "(p o1)", "(p o3)"], &[("(a o1)", -3.0), ("(a o2)", -1.0), ("(a o3)", -3.0)], "(a o1)"),
        example(mdp, &["(clear o3)", "(r o1 o3)"], &[("(a o1)", -5.0), ("(a o2)", -5.0), ("(a o3)", -2.0), ("(b o2)", -7.0)], "(a o1)"),
    ]
}

#[test]
fn hvalue_matches_naive_sums() {
    let mdp = pick_mdp();
    let d = TrainingSet::new(&mdp, &three_examples(&mdp));
    let cfg = LearnerConfig::default();
    let v = world_only(&mdp);
    let a = act(&mdp, "(a o1)").schema;
    let b = act(&mdp, "(b o1)").schema;
    let lits = enumerate_literals(2, 1, &v.unary, &v.binary, DEFAULT_ENUMERATION_CAP).unwrap();
    for t in [a, b] {
        for (i, l) in lits.iter().enumerate() {
            for rule in [Rule { action: t, literals: vec![l.clone()] }, Rule { action: t, literals: vec![l.clone(), lits[(i * 7) % lits.len()].clone()] }] {
                assert_eq!(hvalue(&rule, &d, &cfg).hvalue, naive_hvalue(&rule, &d), "{rule:?}");
            }
        }
    }
    // order independence
    let mut rev = three_examples(&mdp);
    rev.reverse();
    let r = TrainingSet::new(&mdp, &rev);
    let rule = parse_policy_for("a: (x1 in (not p))", &mdp).unwrap().rules()[0].clone();
    assert_eq!(hvalue(&rule, &d, &cfg).hvalue, hvalue(&rule, &r, &cfg).hvalue);
}

#[test]
fn beam_finds_the_clear_literal() {
    let mdp = pick_mdp();
    let d = TrainingSet::new(&mdp, &three_examples(&mdp));
    let v = world_only(&mdp);
    let cfg = LearnerConfig::default();
    let a = act(&mdp, "(a o1)").schema;
    // exhaustive check over depth-1, length-1 rules
    let lits = enumerate_literals(1, 1, &v.unary, &v.binary, DEFAULT_ENUMERATION_CAP).unwrap();
    let scores: Vec<f64> = lits.iter().map(|l| naive_hvalue(&Rule { action: a, literals: vec![l.clone()] }, &d)).collect();
    let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let winners: Vec<&Literal> = lits.iter().zip(&scores).filter(|(_, s)| **s == best).map(|(l, _)| l).collect();
    let want = parse_policy_for("a: (x1 in clear)", &mdp).unwrap().rules()[0].clone();
    assert_eq!(winners, vec![&want.literals[0]]);

    let got = beam_search(&d, &v, &cfg, a).unwrap();
    assert_eq!(got.rule, want);
    assert_eq!(got.hvalue, best);
}

#[test]
fn beam_keeps_the_empty_rule_when_nothing_helps() {
    let mdp = pick_mdp();
    // every action equally good
    let exs = vec![
        example(&mdp, &["(clear o1)", "(p o2)"], &[("(a o1)", -1.0), ("(a o2)", -1.0), ("(a o3)", -1.0)], "(a o2)"),
        example(&mdp, &["(r o1 o2)"], &[("(a o1)", -2.0), ("(a o2)", -2.0), ("(a o3)", -2.0)], "(a o3)"),
    ];
    let d = TrainingSet::new(&mdp, &exs);
    let a = act(&mdp, "(a o1)").schema;
    let got = beam_search(&d, &world_only(&mdp), &LearnerConfig::default(), a).unwrap();
    assert_eq!(got.rule, Rule::empty(a));
    assert_eq!((got.hvalue, got.covered), (2.0, 2));
}

#[test]
fn learn_rule_takes_the_best_type() {
    let mdp = pick_mdp();
    let only = |a: &str| example(&mdp, &[], &[(a, -1.0)], a);
    let mut exs: Vec<_> = (0..7).map(|_| only("(b o1)")).collect();
    exs.extend((0..3).map(|_| only("(a o2)")));
    let d = TrainingSet::new(&mdp, &exs);
    let cfg = LearnerConfig::default();
    let v = world_only(&mdp);
    let r = learn_rule(&d, &v, &cfg).unwrap().unwrap();
    assert_eq!((r.rule.action, r.hvalue), (act(&mdp, "(b o1)").schema, 7.0));

    // exact tie goes to the least action type
    let tie: Vec<_> = vec![only("(b o1)"), only("(a o2)")];
    let r = learn_rule(&TrainingSet::new(&mdp, &tie), &v, &cfg).unwrap().unwrap();
    assert_eq!((r.rule.action, r.hvalue), (act(&mdp, "(a o1)").schema, 1.0));

    // single type: same as beam search
    let d = TrainingSet::new(&mdp, &three_examples(&mdp)[1..2]);
    let a = act(&mdp, "(a o1)").schema;
    assert_eq!(learn_rule(&d, &v, &cfg).unwrap().unwrap(), beam_search(&d, &v, &cfg, a).unwrap());
}

#[test]
fn empty_set_learns_empty_list() {
    let mdp = pick_mdp();
    let d = TrainingSet::new(&mdp, &[]);
    assert_eq!(learn_decision_list(&d, &world_only(&mdp), &LearnerConfig::default()).unwrap(), DecisionList::default());
}

#[test]
fn examples_without_a_usable_prior_are_dropped() {
    let mdp = pick_mdp();
    let mut ex = example(&mdp, &[], &[("(a o1)", -1.0)], "(a o1)");
    ex.prior = None;
    let no_q = TrainingExample { state: ex.state.clone(), prior: None, q: Vec::new() };
    assert!(TrainingSet::new(&mdp, &[ex, no_q]).is_empty());
}

#[test]
fn bad_config_is_rejected() {
    let mdp = pick_mdp();
    let d = TrainingSet::new(&mdp, &three_examples(&mdp));
    let cfg = LearnerConfig { beam_width: 0, ..LearnerConfig::default() };
    assert!(matches!(learn_decision_list(&d, &world_only(&mdp), &cfg), Err(LearnError::Config(_))));
}

/// Random Q labels on generated states.
fn random_set(spec: &str, count: usize, seed: u64) -> (RelationalMdp, TrainingSet) {
    let spec: GeneratorSpec = spec.parse().unwrap();
    let mdp = spec.mdp();
    let mut rng = seeded(seed);
    let mut exs = Vec::new();
    for _ in 0..count {
        let s = spec.generate(&mdp, &mut rng);
        let legal = mdp.legal_actions(&s);
        let q: Vec<(GroundAction, f64)> = legal.iter().map(|a| (a.clone(), -(rng.gen_range(0..6) as f64))).collect();
        let prior = legal[rng.gen_range(0..legal.len())].clone();
        exs.push(TrainingExample { state: s, prior: Some(prior), q });
    }
    let d = TrainingSet::new(&mdp, &exs);
    (mdp, d)
}

fn lit_ok(l: &Literal, d: usize, arity: usize) -> bool {
    l.expr.depth() <= d && l.var < arity
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn beam_matches_exhaustive_optimum(seed in any::<u64>(), n in 6usize..14) {
        let (mdp, d) = random_set("blocks:3", n, seed);
        let v = Vocabulary::for_mdp(&mdp, None);
        let cfg = LearnerConfig { max_depth: 1, max_literals: 1, beam_width: 10_000, ..LearnerConfig::default() };
        for t in d.action_types() {
            let arity = d.examples().iter().flat_map(|e| &e.actions).find(|a| a.schema == t).unwrap().args.len();
            let lits = enumerate_literals(1, arity, &v.unary, &v.binary, DEFAULT_ENUMERATION_CAP).unwrap();
            let mut best = naive_hvalue(&Rule::empty(t), &d);
            for l in lits {
                best = best.max(naive_hvalue(&Rule { action: t, literals: vec![l] }, &d));
            }
            let got = beam_search(&d, &v, &cfg, t).unwrap();
            prop_assert!((got.hvalue - best).abs() < 1e-9, "type {:?}: {} vs {}", t, got.hvalue, best);
        }
    }

    #[test]
    fn search_scores_agree_with_direct_hvalue(seed in any::<u64>()) {
        let (mdp, d) = random_set("blocks:4", 12, seed);
        let v = Vocabulary::for_mdp(&mdp, None);
        let cfg = LearnerConfig { max_depth: 2, max_literals: 2, beam_width: 4, ..LearnerConfig::default() };
        let search = RuleSearch::new(&d, &v, &cfg).unwrap();
        for t in d.action_types() {
            let r = search.beam_search(t, &vec![true; d.len()]);
            let direct = hvalue(&r.rule, &d, &cfg);
            prop_assert_eq!(r.hvalue, direct.hvalue);
            prop_assert_eq!(r.covered, direct.covered);
            prop_assert!((direct.hvalue - naive_hvalue(&r.rule, &d)).abs() < 1e-9);
        }
    }

    #[test]
    fn decision_lists_cover_and_respect_bounds(seed in any::<u64>(), dl in 1usize..3, ll in 1usize..4) {
        let (mdp, d) = random_set("gripper:2", 15, seed);
        let v = Vocabulary::for_mdp(&mdp, None);
        let cfg = LearnerConfig { max_depth: dl, max_literals: ll, beam_width: 3, ..LearnerConfig::default() };
        let list = learn_decision_list(&d, &v, &cfg).unwrap();
        let n = d.object_count();
        let mut remaining: Vec<&LabeledExample> = d.examples().iter().collect();
        for rule in list.rules() {
            let arity = mdp.domain().schemas[rule.action.0 as usize].params.len();
            prop_assert!(rule.literals.len() <= ll);
            prop_assert!(rule.literals.iter().all(|l| lit_ok(l, dl, arity)));
            let before = remaining.len();
            remaining.retain(|ex| !covers(rule, ex, n));
            // each rule makes progress, and nothing left is covered by it
            prop_assert!(remaining.len() < before);
            prop_assert!(remaining.iter().all(|ex| !covers(rule, ex, n)));
        }
        if !remaining.is_empty() {
            let rest = TrainingSet::from_labeled(remaining.into_iter().cloned().collect(), n);
            let r = learn_rule(&rest, &v, &cfg).unwrap().unwrap();
            prop_assert_eq!(r.covered, 0);
        }
    }
}

#[test]
fn recovers_clear_red_policy() {
    let spec: GeneratorSpec = "clearred:5".parse().unwrap();
    let mdp = spec.mdp();
    let hand = parse_policy_for(&fixture("policies/clearred-hand.txt"), &mdp).unwrap();
    let mut rng = seeded(17);
    let trajs = improved_trajectories(&mdp, &hand, &GeneratorSampler(spec), 100, &RolloutConfig::new(1, 50, 1.0), &mut rng);
    let d = TrainingSet::new(&mdp, &flatten(&trajs));
    let v = Vocabulary::for_mdp(&mdp, Some(&spec.default_goal_predicates()));
    let list = learn_decision_list(&d, &v, &LearnerConfig::default()).unwrap();
    let problems: Vec<RelState> = (0..50).map(|_| spec.generate(&mdp, &mut rng)).collect();
    let report = evaluate_on(&mdp, &list, &problems, 100, &mut rng);
    assert_eq!(report.success_ratio, 1.0, "{list:?}");
}
