//! Literal set-theoretic evaluator for class expressions, written against
//! the textbook equations rather than the optimized interpreter.

use std::collections::BTreeSet;

use lrw_core::mdp::{Fact, ObjId, RelState};
use lrw_core::taxonomy::{ClassExpr, RelExpr};

pub type Pairs = BTreeSet<(u32, u32)>;
pub type Objs = BTreeSet<u32>;

pub fn rel(r: &RelExpr, s: &RelState, n: u32) -> Pairs {
    match r {
        RelExpr::Prim(p) => {
            let mut out = Pairs::new();
            for a in 0..n {
                for b in 0..n {
                    if s.holds(&Fact::new(*p, [ObjId(a), ObjId(b)])) {
                        out.insert((a, b));
                    }
                }
            }
            out
        }
        RelExpr::Inverse(x) => rel(x, s, n).into_iter().map(|(a, b)| (b, a)).collect(),
        RelExpr::Star(x) => {
            let base = rel(x, s, n);
            let mut out = Pairs::new();
            // breadth-first search from every start object
            for start in 0..n {
                let mut seen = vec![start];
                let mut frontier = vec![start];
                while let Some(o) = frontier.pop() {
                    for &(a, b) in &base {
                        if a == o && !seen.contains(&b) {
                            seen.push(b);
                            frontier.push(b);
                        }
                    }
                }
                out.extend(seen.into_iter().map(|b| (start, b)));
            }
            out
        }
    }
}

pub fn class(e: &ClassExpr, s: &RelState, n: u32, binding: &[ObjId]) -> Objs {
    match e {
        ClassExpr::Prim(p) => (0..n).filter(|&o| s.holds(&Fact::new(*p, [ObjId(o)]))).collect(),
        ClassExpr::Var(i) => [binding[*i].0].into_iter().collect(),
        ClassExpr::AThing => (0..n).collect(),
        ClassExpr::Not(c) => {
            let inner = class(c, s, n, binding);
            (0..n).filter(|o| !inner.contains(o)).collect()
        }
        ClassExpr::Apply(r, c) => {
            let pairs = rel(r, s, n);
            let inner = class(c, s, n, binding);
            (0..n).filter(|&o| inner.iter().any(|&c| pairs.contains(&(c, o)))).collect()
        }
        ClassExpr::Min(r) => {
            let pairs = rel(r, s, n);
            (0..n)
                .filter(|&o| (0..n).any(|x| pairs.contains(&(o, x))) && !(0..n).any(|x| pairs.contains(&(x, o))))
                .collect()
        }
    }
}
