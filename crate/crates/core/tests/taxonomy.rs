mod common;
#[path = "common/oracle.rs"]
mod oracle;

use std::collections::BTreeSet;

use common::{builtin_mdp, fixture, state};
use lrw_core::harness::{run_episode, GeneratorSpec};
use lrw_core::mdp::{Fact, GroundAction, ObjId, PredId, PredKind, RelState, RelationalMdp, Simulator};
use lrw_core::parser::parse_policy_for;
use lrw_core::rng::seeded;
use lrw_core::taxonomy::{
    depth, enumerate_classes, enumerate_literals, interpret_class, interpret_rel, rule_allows, select_action, ClassExpr,
    DecisionList, Literal, RelExpr, Rule,
};
use proptest::prelude::*;

const UNARY: [u32; 2] = [0, 1];
const BINARY: [u32; 2] = [2, 3];
const KINDS: [PredKind; 3] = [PredKind::World, PredKind::Goal, PredKind::Comparison];

fn arb_pred(indices: &'static [u32]) -> impl Strategy<Value = PredId> {
    (prop::sample::select(indices), prop::sample::select(&KINDS[..])).prop_map(|(i, k)| PredId { kind: k, index: i })
}

fn arb_rel() -> impl Strategy<Value = RelExpr> {
    arb_pred(&BINARY).prop_map(RelExpr::Prim).prop_recursive(3, 8, 1, |inner| {
        prop_oneof![inner.clone().prop_map(RelExpr::inverse), inner.prop_map(RelExpr::star)]
    })
}

fn arb_class() -> impl Strategy<Value = ClassExpr> {
    let leaf = prop_oneof![
        arb_pred(&UNARY).prop_map(ClassExpr::Prim),
        (0usize..2).prop_map(ClassExpr::Var),
        Just(ClassExpr::AThing),
        arb_rel().prop_map(ClassExpr::Min),
    ];
    leaf.prop_recursive(3, 24, 1, |inner| {
        prop_oneof![inner.clone().prop_map(ClassExpr::not), (arb_rel(), inner).prop_map(|(r, c)| ClassExpr::apply(r, c))]
    })
}

/// Random world and goal facts over `n` objects.
fn arb_state() -> impl Strategy<Value = (usize, RelState)> {
    (1usize..=8).prop_flat_map(|n| {
        let fact = (0u32..4, 0..n as u32, 0..n as u32, any::<bool>());
        prop::collection::vec(fact, 0..40).prop_map(move |fs| {
            let (mut world, mut goal) = (Vec::new(), Vec::new());
            for (p, a, b, g) in fs {
                let args = if p < 2 { vec![ObjId(a)] } else { vec![ObjId(a), ObjId(b)] };
                let f = Fact::new(PredId::world(p), args);
                if g {
                    goal.push(f.with_kind(PredKind::Goal));
                } else {
                    world.push(f);
                }
            }
            (n, RelState::new(world, goal))
        })
    })
}

fn set(objs: &[u32]) -> BTreeSet<u32> {
    objs.iter().copied().collect()
}

fn interp(e: &ClassExpr, s: &RelState, n: usize, binding: &[ObjId]) -> BTreeSet<u32> {
    interpret_class(e, s, n, binding).unwrap().iter().map(|o| o.0).collect()
}

fn rel_facts(pairs: &[(u32, u32)]) -> RelState {
    RelState::new(pairs.iter().map(|&(a, b)| Fact::new(PredId::world(2), [ObjId(a), ObjId(b)])), vec![])
}

#[test]
fn depth_examples() {
    let mdp = builtin_mdp("blocks", &["a"]);
    let p = |n: &str| mdp.pred(n).unwrap();
    let e = ClassExpr::apply(RelExpr::Prim(p("gon")).inverse(), ClassExpr::Prim(p("holding")));
    assert_eq!(depth(&e), 2);
    let on = RelExpr::Prim(p("on"));
    let e = ClassExpr::apply(on.clone().star(), ClassExpr::apply(on, ClassExpr::Prim(p("gclear"))));
    assert_eq!(depth(&e), 3);
    assert_eq!(depth(&ClassExpr::AThing), 1);
}

#[test]
fn relation_examples() {
    let on = RelExpr::Prim(PredId::world(2));
    let s = rel_facts(&[(0, 1)]);
    assert_eq!(interpret_rel(&on.clone().inverse(), &s, 2), vec![(ObjId(1), ObjId(0))]);
    let s = rel_facts(&[(0, 1), (1, 2)]);
    let star: BTreeSet<(u32, u32)> = interpret_rel(&on.star(), &s, 3).into_iter().map(|(a, b)| (a.0, b.0)).collect();
    assert!(star.contains(&(0, 2)));
    assert!((0..3).all(|o| star.contains(&(o, o))));
}

#[test]
fn class_examples() {
    let s = rel_facts(&[]);
    assert_eq!(interp(&ClassExpr::AThing, &s, 3, &[]), set(&[0, 1, 2]));
    assert_eq!(interp(&ClassExpr::Var(0), &s, 3, &[ObjId(1), ObjId(2)]), set(&[1]));
    assert!(interpret_class(&ClassExpr::Var(1), &s, 3, &[ObjId(1)]).is_err());
    // every member of a cycle has an incoming edge
    let cyc = rel_facts(&[(0, 1), (1, 0), (2, 0)]);
    assert_eq!(interp(&ClassExpr::Min(RelExpr::Prim(PredId::world(2))), &cyc, 4, &[]), set(&[2]));
    let cyc = rel_facts(&[(0, 1), (1, 2), (2, 0)]);
    assert!(interp(&ClassExpr::Min(RelExpr::Prim(PredId::world(2))), &cyc, 3, &[]).is_empty());
}

/// A block is well placed when it and everything beneath it sit where the
/// goal wants them.
fn well_placed(mdp: &RelationalMdp, s: &RelState, x: ObjId, below_of: &dyn Fn(ObjId) -> Option<ObjId>) -> bool {
    let table = |name: &str| Fact::new(mdp.pred(name).unwrap(), [x]);
    match below_of(x) {
        None => s.holds(&table("on-table")) && s.holds(&table("gon-table")),
        Some(y) => {
            let on_goal = s.holds(&Fact::new(
                mdp.pred("gon").unwrap(),
                match mdp.domain().name.as_str() {
                    "clearred" => [y, x],
                    _ => [x, y],
                },
            ));
            on_goal && well_placed(mdp, s, y, below_of)
        }
    }
}

#[test]
fn well_constructed_towers_in_both_orientations() {
    let names = ["b1", "b2", "b3", "b4"];
    // b2 on b1 on table, b4 on b3 on table; the goal wants b2 on b1 and b3 on b4
    let cases = [
        ("blocks", vec!["(on-table b1)", "(on b2 b1)", "(on-table b3)", "(on b4 b3)"],
            vec!["(on-table b1)", "(on b2 b1)", "(on-table b4)", "(on b3 b4)"], "(con^-* con-table)"),
        ("clearred", vec!["(on-table b1)", "(on b1 b2)", "(on-table b3)", "(on b3 b4)"],
            vec!["(on-table b1)", "(on b1 b2)", "(on-table b4)", "(on b4 b3)"], "(con^* con-table)"),
    ];
    for (domain, world, goal, expr) in cases {
        let mdp = builtin_mdp(domain, &names);
        let s = state(&mdp, &world, &goal);
        let list = parse_policy_for(&format!("putdown: (x1 in {expr})"), &mdp).unwrap();
        let e = &list.rules()[0].literals[0].expr;
        let got = interp(e, &s, 4, &[]);
        let ids: Vec<ObjId> = names.iter().map(|n| mdp.universe().get(n).unwrap()).collect();
        let below = |x: ObjId| -> Option<ObjId> {
            ids.iter().copied().find(|&y| {
                let f = if domain == "clearred" { [y, x] } else { [x, y] };
                s.holds(&Fact::new(mdp.pred("on").unwrap(), f))
            })
        };
        let want: BTreeSet<u32> = ids.iter().filter(|&&x| well_placed(&mdp, &s, x, &below)).map(|o| o.0).collect();
        assert_eq!(got, want, "{domain}");
        assert_eq!(got, set(&[ids[0].0, ids[1].0]), "{domain}");
        assert_eq!(got, oracle::class(e, &s, 4, &[]), "{domain}");
    }
}

fn clearred_fixture() -> (RelationalMdp, RelState, DecisionList) {
    let mdp = builtin_mdp("clearred", &["b1", "b2", "b3"]);
    // b3 on b2 on red b1
    let s = state(
        &mdp,
        &["(on-table b1)", "(on b1 b2)", "(on b2 b3)", "(clear b3)", "(red b1)", "(handempty)"],
        &["(clear b1)"],
    );
    let list = parse_policy_for(&fixture("policies/clearred-hand.txt"), &mdp).unwrap();
    (mdp, s, list)
}

#[test]
fn clear_red_pickup_rule() {
    let (mdp, s, list) = clearred_fixture();
    let pickup = &list.rules()[1];
    let a = mdp.parse_action("(pickup b3 b2)").unwrap();
    assert!(rule_allows(pickup, &s, 3, &a));
    let lit = &pickup.literals[1].expr;
    assert_eq!(oracle::class(lit, &s, 3, &a.args), set(&[1, 2]));
    assert!(!rule_allows(pickup, &s, 3, &mdp.parse_action("(pickup b2 b1)").unwrap()));
    assert!(rule_allows(&Rule::empty(a.schema), &s, 3, &mdp.parse_action("(pickup b2 b1)").unwrap()));
    assert_eq!(select_action(&list, &mdp, &s), Some(a));
}

#[test]
fn rule_order_and_fallthrough() {
    let (mdp, _, list) = clearred_fixture();
    let s = state(&mdp, &["(holding b1)", "(on-table b2)", "(on b2 b3)", "(clear b3)", "(red b2)"], &["(clear b2)"]);
    let a = select_action(&list, &mdp, &s).unwrap();
    assert_eq!(mdp.format_action(&a), "(putdown b1)");
    assert_eq!(select_action(&list, &mdp, &s), Some(a));

    let blocks = builtin_mdp("blocks", &["a", "b"]);
    let s = state(&blocks, &["(handempty)", "(on-table a)", "(on-table b)", "(clear a)", "(clear b)"], &["(on a b)"]);
    let nothing = parse_policy_for("pickup: (x1 in (not a-thing))", &blocks).unwrap();
    assert_eq!(blocks.format_action(&select_action(&nothing, &blocks, &s).unwrap()), "(pickup a)");
    let stuck = state(&blocks, &["(on a b)"], &["(on b a)"]);
    assert_eq!(select_action(&nothing, &blocks, &stuck), None);
}

#[test]
fn clear_red_policy_solves_generated_problems() {
    let spec: GeneratorSpec = "clearred:5".parse().unwrap();
    let mdp = spec.mdp();
    let list = parse_policy_for(&fixture("policies/clearred-hand.txt"), &mdp).unwrap();
    let mut rng = seeded(5);
    for _ in 0..50 {
        let s = spec.generate(&mdp, &mut rng);
        assert!(run_episode(&mdp, &list, s, 100, &mut rng).is_some());
    }
}

#[test]
fn depth_one_literals() {
    let mdp = builtin_mdp("clearred", &["b1"]);
    let p = |n: &str| mdp.pred(n).unwrap();
    let lits = enumerate_literals(1, 1, &[p("clear"), p("red")], &[p("on")], 1000).unwrap();
    let on = RelExpr::Prim(p("on"));
    let want = [
        ClassExpr::Prim(p("clear")),
        ClassExpr::Prim(p("red")),
        ClassExpr::AThing,
        ClassExpr::Var(0),
        ClassExpr::Min(on.clone()),
        ClassExpr::Min(on.clone().inverse()),
        ClassExpr::Min(on.clone().star()),
        ClassExpr::Min(on.inverse().star()),
    ];
    let got: BTreeSet<&ClassExpr> = lits.iter().map(|l| &l.expr).collect();
    assert_eq!(lits.len(), 8);
    assert_eq!(got, want.iter().collect());
    assert!(lits.iter().all(|l| l.var == 0));
}

fn double_negation(e: &ClassExpr) -> bool {
    match e {
        ClassExpr::Not(c) => matches!(**c, ClassExpr::Not(_)) || double_negation(c),
        ClassExpr::Apply(_, c) => double_negation(c),
        _ => false,
    }
}

fn canonical_rel(r: &RelExpr) -> bool {
    match r {
        RelExpr::Prim(_) => true,
        RelExpr::Inverse(x) => matches!(**x, RelExpr::Prim(_)),
        RelExpr::Star(x) => match &**x {
            RelExpr::Prim(_) => true,
            RelExpr::Inverse(y) => matches!(**y, RelExpr::Prim(_)),
            RelExpr::Star(_) => false,
        },
    }
}

fn rels_of(e: &ClassExpr, out: &mut Vec<RelExpr>) {
    match e {
        ClassExpr::Apply(r, c) => {
            out.push(r.clone());
            rels_of(c, out);
        }
        ClassExpr::Not(c) => rels_of(c, out),
        ClassExpr::Min(r) => out.push(r.clone()),
        _ => {}
    }
}

#[test]
fn enumeration_is_canonical_and_monotone() {
    let unary = [PredId::world(0), PredId::world(1).with_kind(PredKind::Goal)];
    let binary = [PredId::world(2), PredId::world(2).with_kind(PredKind::Comparison)];
    let mut prev: Vec<ClassExpr> = Vec::new();
    for d in 1..=3 {
        let cur = enumerate_classes(d, 2, &unary, &binary, usize::MAX).unwrap();
        let distinct: BTreeSet<&ClassExpr> = cur.iter().collect();
        assert_eq!(distinct.len(), cur.len());
        assert!(cur.iter().all(|c| depth(c) <= d));
        assert!(cur.iter().all(|c| !double_negation(c)));
        let mut rels = Vec::new();
        cur.iter().for_each(|c| rels_of(c, &mut rels));
        assert!(rels.iter().all(canonical_rel));
        assert!(cur.starts_with(&prev));
        prev = cur;
    }
    let lits = enumerate_literals(3, 2, &unary, &binary, usize::MAX).unwrap();
    assert_eq!(lits.len(), 2 * prev.len());
    assert!(lits.iter().any(|l| *l == Literal { var: 1, expr: ClassExpr::Var(0) }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn interpreter_matches_brute_force((n, s) in arb_state(), e in arb_class(), b0 in 0u32..8, b1 in 0u32..8) {
        let binding = [ObjId(b0 % n as u32), ObjId(b1 % n as u32)];
        prop_assert_eq!(interp(&e, &s, n, &binding), oracle::class(&e, &s, n as u32, &binding));
    }

    #[test]
    fn relations_match_brute_force((n, s) in arb_state(), r in arb_rel()) {
        let got: BTreeSet<(u32, u32)> = interpret_rel(&r, &s, n).into_iter().map(|(a, b)| (a.0, b.0)).collect();
        prop_assert_eq!(got, oracle::rel(&r, &s, n as u32));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn complement_star_and_monotonicity((n, s) in arb_state(), c in arb_class(), d in arb_class(), r in arb_rel()) {
        let b = [ObjId(0), ObjId(0)];
        let all: BTreeSet<u32> = (0..n as u32).collect();
        let ci = interp(&c, &s, n, &b);
        let not_c = interp(&c.clone().not(), &s, n, &b);
        prop_assert_eq!(&not_c, &all.difference(&ci).copied().collect());
        let starred = interp(&ClassExpr::apply(r.clone().star(), c.clone()), &s, n, &b);
        prop_assert!(ci.is_subset(&starred));
        let di = interp(&d, &s, n, &b);
        if ci.is_subset(&di) {
            let rc = interp(&ClassExpr::apply(r.clone(), c), &s, n, &b);
            let rd = interp(&ClassExpr::apply(r, d), &s, n, &b);
            prop_assert!(rc.is_subset(&rd));
        }
    }

    #[test]
    fn selected_actions_are_legal(seed in any::<u64>(), rules in prop::collection::vec((0u32..4, arb_class()), 0..4)) {
        let spec: GeneratorSpec = "blocks:4".parse().unwrap();
        let mdp = spec.mdp();
        let mut rng = seeded(seed);
        let s = spec.generate(&mdp, &mut rng);
        let rules: Vec<Rule> = rules
            .into_iter()
            .map(|(t, e)| Rule { action: lrw_core::mdp::SchemaId(t), literals: vec![Literal { var: 0, expr: remap(e) }] })
            .collect();
        let list = DecisionList::new(rules);
        let legal: Vec<GroundAction> = mdp.legal_actions(&s);
        match select_action(&list, &mdp, &s) {
            Some(a) => prop_assert!(legal.contains(&a)),
            None => prop_assert!(legal.is_empty()),
        }
    }
}

/// Map the synthetic predicate indices onto the blocks predicates
/// (`on`, `on-table`, `clear`, `holding`) and keep variables in range.
fn remap(e: ClassExpr) -> ClassExpr {
    fn rel(r: RelExpr) -> RelExpr {
        match r {
            RelExpr::Prim(p) => RelExpr::Prim(PredId { kind: p.kind, index: 0 }),
            RelExpr::Inverse(x) => rel(*x).inverse(),
            RelExpr::Star(x) => rel(*x).star(),
        }
    }
    match e {
        ClassExpr::Prim(p) => ClassExpr::Prim(PredId { kind: p.kind, index: p.index + 1 }),
        ClassExpr::Var(_) => ClassExpr::Var(0),
        ClassExpr::AThing => ClassExpr::AThing,
        ClassExpr::Not(c) => remap(*c).not(),
        ClassExpr::Apply(r, c) => ClassExpr::apply(rel(r), remap(*c)),
        ClassExpr::Min(r) => ClassExpr::Min(rel(r)),
    }
}
