use super::{ClassExpr, Literal, RelExpr, TaxonomyError};
use crate::mdp::PredId;

pub const DEFAULT_ENUMERATION_CAP: usize = 200_000;

/// The four relation forms built from each binary predicate:
/// `R`, `R⁻¹`, `R*`, `(R⁻¹)*`.
pub fn canonical_relations(binary: &[PredId]) -> Vec<RelExpr> {
    let mut out = Vec::with_capacity(binary.len() * 4);
    for &p in binary {
        let r = RelExpr::Prim(p);
        out.push(r.clone());
        out.push(r.clone().inverse());
        out.push(r.clone().star());
        out.push(r.inverse().star());
    }
    out
}

/// Number of canonical classes per exact depth 1..=d, without building them.
pub fn count_classes(d: usize, arity: usize, unary: usize, binary: usize) -> Vec<u128> {
    let rels = 4 * binary as u128;
    let mut out = Vec::with_capacity(d);
    let (mut nots, mut others) = (0u128, unary as u128 + 1 + arity as u128 + rels);
    for k in 1..=d {
        if k > 1 {
            let total = nots + others;
            let next_nots = others;
            others = rels.saturating_mul(total);
            nots = next_nots;
        }
        out.push(nots.saturating_add(others));
    }
    out
}

/// Canonical class expressions of depth at most `d`, shallowest first.
///
/// Depth 1 lists primitives, `a-thing`, the variables and `(min R)`. Each
/// further level adds `(not C)` for every non-negated `C` of the previous
/// level, then `(R C)` for every relation form and previous-level `C`.
pub fn enumerate_classes(
    d: usize,
    arity: usize,
    unary: &[PredId],
    binary: &[PredId],
    cap: usize,
) -> Result<Vec<ClassExpr>, TaxonomyError> {
    if d == 0 {
        return Err(TaxonomyError::ZeroDepth);
    }
    let total: u128 = count_classes(d, arity, unary.len(), binary.len()).iter().sum();
    let literals = total.saturating_mul(arity.max(1) as u128);
    if literals > cap as u128 {
        return Err(TaxonomyError::TooManyLiterals { count: literals, cap });
    }
    let rels = canonical_relations(binary);
    let mut level: Vec<ClassExpr> = Vec::new();
    level.extend(unary.iter().map(|&p| ClassExpr::Prim(p)));
    level.push(ClassExpr::AThing);
    level.extend((0..arity).map(ClassExpr::Var));
    level.extend(rels.iter().cloned().map(ClassExpr::Min));
    let mut all = level.clone();
    for _ in 1..d {
        let mut next = Vec::new();
        for c in &level {
            if !matches!(c, ClassExpr::Not(_)) {
                next.push(c.clone().not());
            }
        }
        for r in &rels {
            for c in &level {
                next.push(ClassExpr::apply(r.clone(), c.clone()));
            }
        }
        all.extend(next.iter().cloned());
        level = next;
    }
    Ok(all)
}

/// One literal per (argument position, canonical class of depth ≤ d).
pub fn enumerate_literals(
    d: usize,
    arity: usize,
    unary: &[PredId],
    binary: &[PredId],
    cap: usize,
) -> Result<Vec<Literal>, TaxonomyError> {
    let classes = enumerate_classes(d, arity, unary, binary, cap)?;
    let mut out = Vec::with_capacity(classes.len() * arity);
    for var in 0..arity {
        out.extend(classes.iter().map(|c| Literal { var, expr: c.clone() }));
    }
    Ok(out)
}
