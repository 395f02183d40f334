use std::collections::HashMap;
use std::fmt::Write as _;

use super::{parse_sexprs, ParseError, SExpr, Span};
use crate::mdp::{
    ActionSchema, AtomTemplate, Condition, Domain, Fact, ObjId, Outcome, Param, PredId, PredKind, PredicateDecl,
    RelState, Term, TypeDecl, Universe,
};

const REQUIREMENTS: &[&str] =
    &[":strips", ":typing", ":equality", ":probabilistic-effects", ":negative-preconditions"];

const PROBABILITY_SUM_TOLERANCE: f64 = 1e-6;

fn err(msg: impl Into<String>, span: Span) -> ParseError {
    ParseError::new(msg, span)
}

fn expect_list<'a>(e: &'a SExpr, what: &str) -> Result<&'a [SExpr], ParseError> {
    e.list().ok_or_else(|| err(format!("expected a list for {what}"), e.span()).expecting("'('"))
}

fn expect_atom<'a>(e: &'a SExpr, what: &str) -> Result<&'a str, ParseError> {
    e.atom().ok_or_else(|| err(format!("expected {what}"), e.span()).expecting(what.to_string()))
}

/// `a b - t c` style lists.
fn typed_list(items: &[SExpr]) -> Result<Vec<(String, Option<String>, Span)>, ParseError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Span)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let a = expect_atom(&items[i], "a name")?;
        if a == "-" {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| err("missing type after '-'", items[i].span()).expecting("a type name"))?;
            let ty = expect_atom(ty, "a type name")?;
            for (n, s) in pending.drain(..) {
                out.push((n, Some(ty.to_string()), s));
            }
            i += 2;
        } else {
            pending.push((a.to_string(), items[i].span()));
            i += 1;
        }
    }
    out.extend(pending.into_iter().map(|(n, s)| (n, None, s)));
    Ok(out)
}

fn real_type(t: Option<String>) -> Option<String> {
    t.filter(|t| t != "object")
}

struct Scope<'a> {
    preds: &'a HashMap<String, (u32, usize)>,
    params: &'a [Param],
    constants: &'a HashMap<String, ObjId>,
}

impl Scope<'_> {
    fn term(&self, e: &SExpr) -> Result<Term, ParseError> {
        let a = expect_atom(e, "a term")?;
        if a.starts_with('?') {
            return self
                .params
                .iter()
                .position(|p| p.name == a)
                .map(Term::Var)
                .ok_or_else(|| err(format!("unknown variable {a}"), e.span()));
        }
        self.constants
            .get(a)
            .map(|&o| Term::Const(o))
            .ok_or_else(|| err(format!("unknown constant {a}"), e.span()))
    }

    fn atom(&self, e: &SExpr) -> Result<AtomTemplate, ParseError> {
        let l = expect_list(e, "an atom")?;
        let head = l.first().ok_or_else(|| err("empty atom", e.span()).expecting("a predicate name"))?;
        let name = expect_atom(head, "a predicate name")?;
        let &(index, arity) =
            self.preds.get(name).ok_or_else(|| err(format!("undeclared predicate {name}"), head.span()))?;
        if l.len() - 1 != arity {
            return Err(err(format!("{name} takes {arity} arguments, got {}", l.len() - 1), e.span()));
        }
        let args = l[1..].iter().map(|t| self.term(t)).collect::<Result<Vec<_>, _>>()?;
        Ok(AtomTemplate::new(PredId::world(index), args))
    }

    fn condition(&self, e: &SExpr, positive: bool) -> Result<Condition, ParseError> {
        match e.head() {
            Some("not") if positive => {
                let l = e.list().unwrap();
                if l.len() != 2 {
                    return Err(err("not takes one argument", e.span()));
                }
                self.condition(&l[1], false)
            }
            Some("=") => {
                let l = e.list().unwrap();
                if l.len() != 3 {
                    return Err(err("= takes two arguments", e.span()));
                }
                Ok(Condition::Eq { left: self.term(&l[1])?, right: self.term(&l[2])?, positive })
            }
            Some("and" | "or" | "imply" | "exists" | "forall" | "when" | "not") => {
                Err(err(format!("unsupported connective {}", e.head().unwrap()), e.span()))
            }
            _ => Ok(Condition::Atom { atom: self.atom(e)?, positive }),
        }
    }

    fn precondition(&self, e: &SExpr) -> Result<Vec<Condition>, ParseError> {
        match e.head() {
            Some("and") => e.list().unwrap()[1..].iter().map(|c| self.condition(c, true)).collect(),
            None if e.list().is_some_and(|l| l.is_empty()) => Ok(Vec::new()),
            _ => Ok(vec![self.condition(e, true)?]),
        }
    }

    /// Add and delete lists of a conjunction of literals.
    fn literals(&self, e: &SExpr, add: &mut Vec<AtomTemplate>, del: &mut Vec<AtomTemplate>) -> Result<(), ParseError> {
        match e.head() {
            Some("and") => {
                for c in &e.list().unwrap()[1..] {
                    self.literals(c, add, del)?;
                }
                Ok(())
            }
            Some("not") => {
                let l = e.list().unwrap();
                if l.len() != 2 {
                    return Err(err("not takes one argument", e.span()));
                }
                del.push(self.atom(&l[1])?);
                Ok(())
            }
            Some("probabilistic") => Err(err("nested probabilistic effect", e.span())),
            None if e.list().is_some_and(|l| l.is_empty()) => Ok(()),
            _ => {
                add.push(self.atom(e)?);
                Ok(())
            }
        }
    }

    fn effect(&self, e: &SExpr) -> Result<Vec<Outcome>, ParseError> {
        let parts: Vec<&SExpr> = match e.head() {
            Some("and") => e.list().unwrap()[1..].iter().collect(),
            _ => vec![e],
        };
        let mut base = Outcome { probability: 1.0, add: Vec::new(), delete: Vec::new() };
        let mut blocks: Vec<Vec<Outcome>> = Vec::new();
        for p in parts {
            if p.head() == Some("probabilistic") {
                blocks.push(self.probabilistic(p)?);
            } else {
                self.literals(p, &mut base.add, &mut base.delete)?;
            }
        }
        let mut outcomes = vec![base];
        for block in blocks {
            let mut next = Vec::with_capacity(outcomes.len() * block.len());
            for o in &outcomes {
                for b in &block {
                    let mut add = o.add.clone();
                    add.extend(b.add.iter().cloned());
                    let mut delete = o.delete.clone();
                    delete.extend(b.delete.iter().cloned());
                    next.push(Outcome { probability: o.probability * b.probability, add, delete });
                }
            }
            outcomes = next;
        }
        Ok(outcomes)
    }

    fn probabilistic(&self, e: &SExpr) -> Result<Vec<Outcome>, ParseError> {
        let l = e.list().unwrap();
        if l.len() < 3 || (l.len() - 1) % 2 != 0 {
            return Err(err("probabilistic needs probability/effect pairs", e.span()));
        }
        let mut out = Vec::new();
        let mut sum = 0.0;
        for pair in l[1..].chunks(2) {
            let ptxt = expect_atom(&pair[0], "a probability")?;
            let p = parse_number(ptxt).ok_or_else(|| err(format!("bad probability {ptxt}"), pair[0].span()))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(err(format!("probability {ptxt} outside [0,1]"), pair[0].span()));
            }
            let mut add = Vec::new();
            let mut delete = Vec::new();
            self.literals(&pair[1], &mut add, &mut delete)?;
            sum += p;
            out.push(Outcome { probability: p, add, delete });
        }
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(err(format!("probabilities sum to {sum}, not 1"), e.span()));
        }
        for o in &mut out {
            o.probability /= sum;
        }
        Ok(out)
    }
}

fn parse_number(t: &str) -> Option<f64> {
    if let Some((a, b)) = t.split_once('/') {
        let (a, b): (f64, f64) = (a.parse().ok()?, b.parse().ok()?);
        return (b != 0.0).then(|| a / b);
    }
    t.parse().ok()
}

/// Parse a domain file into a compiled domain.
pub fn parse_domain(text: &str) -> Result<Domain, ParseError> {
    let top = parse_sexprs(text)?;
    let doc = match top.as_slice() {
        [d] => d,
        [] => return Err(err("empty document", Span { line: 1, col: 1 }).expecting("(define ...)")),
        [_, extra, ..] => return Err(err("trailing content after domain", extra.span())),
    };
    let items = expect_list(doc, "define")?;
    if items.first().and_then(SExpr::atom) != Some("define") {
        return Err(err("expected (define ...)", doc.span()).expecting("define"));
    }
    let name_e = items.get(1).ok_or_else(|| err("missing domain name", doc.span()))?;
    let name = match name_e.list() {
        Some([h, n]) if h.atom() == Some("domain") => expect_atom(n, "a domain name")?.to_string(),
        _ => return Err(err("expected (domain NAME)", name_e.span())),
    };

    let mut requirements = Vec::new();
    let mut types: Vec<TypeDecl> = Vec::new();
    let mut constants: Vec<(String, Option<String>)> = Vec::new();
    let mut preds: Vec<PredicateDecl> = Vec::new();
    let mut pred_spans: Vec<Span> = Vec::new();
    let mut actions: Vec<&SExpr> = Vec::new();
    let mut constant_spans = Vec::new();

    for sec in &items[2..] {
        let l = expect_list(sec, "a domain section")?;
        let key = l.first().and_then(SExpr::atom).unwrap_or("");
        match key {
            ":requirements" => {
                for r in &l[1..] {
                    let r_name = expect_atom(r, "a requirement")?;
                    if !REQUIREMENTS.contains(&r_name) {
                        return Err(err(format!("unsupported requirement {r_name}"), r.span()));
                    }
                    requirements.push(r_name.to_string());
                }
            }
            ":types" => {
                for (n, parent, _) in typed_list(&l[1..])? {
                    if n != "object" {
                        types.push(TypeDecl { name: n, parent: real_type(parent) });
                    }
                }
            }
            ":constants" => {
                for (n, t, s) in typed_list(&l[1..])? {
                    constants.push((n, real_type(t)));
                    constant_spans.push(s);
                }
            }
            ":predicates" => {
                for p in &l[1..] {
                    let pl = expect_list(p, "a predicate declaration")?;
                    let head = pl.first().ok_or_else(|| err("empty predicate", p.span()))?;
                    let pname = expect_atom(head, "a predicate name")?;
                    let params = typed_list(&pl[1..])?;
                    if preds.iter().any(|d| d.name == pname) {
                        return Err(err(format!("duplicate predicate {pname}"), head.span()));
                    }
                    preds.push(PredicateDecl::world(pname, params.len()));
                    pred_spans.push(head.span());
                }
            }
            ":action" => actions.push(sec),
            _ => return Err(err(format!("unknown keyword {key}"), sec.span()).expecting("a domain section")),
        }
    }

    for t in &types {
        match preds.iter().find(|p| p.name == t.name) {
            Some(p) if p.arity == 1 => {}
            Some(_) => return Err(err(format!("type {} clashes with a predicate", t.name), doc.span())),
            None => preds.push(PredicateDecl::world(t.name.clone(), 1)),
        }
    }
    for t in &types {
        if let Some(p) = &t.parent {
            if !types.iter().any(|d| &d.name == p) {
                return Err(err(format!("unknown parent type {p}"), doc.span()));
            }
        }
    }

    let pred_index: HashMap<String, (u32, usize)> =
        preds.iter().enumerate().map(|(i, p)| (p.name.clone(), (i as u32, p.arity))).collect();
    let mut const_index = HashMap::new();
    for (i, (c, _)) in constants.iter().enumerate() {
        if const_index.insert(c.clone(), ObjId(i as u32)).is_some() {
            return Err(err(format!("duplicate constant {c}"), constant_spans[i]));
        }
    }

    let mut schemas = Vec::new();
    for a in actions {
        let l = a.list().unwrap();
        let aname = expect_atom(l.get(1).ok_or_else(|| err("missing action name", a.span()))?, "an action name")?;
        let mut params = Vec::new();
        let mut pre_e = None;
        let mut eff_e = None;
        let mut cost = 1.0;
        let mut i = 2;
        while i < l.len() {
            let key = expect_atom(&l[i], "an action keyword")?;
            let val = l.get(i + 1).ok_or_else(|| err(format!("missing value for {key}"), l[i].span()))?;
            match key {
                ":parameters" => {
                    for (n, t, s) in typed_list(expect_list(val, "parameters")?)? {
                        if !n.starts_with('?') {
                            return Err(err(format!("parameter {n} must start with '?'"), s));
                        }
                        if let Some(t) = &t {
                            if t != "object" && !types.iter().any(|d| &d.name == t) {
                                return Err(err(format!("unknown type {t}"), s));
                            }
                        }
                        params.push(Param { name: n, ty: real_type(t) });
                    }
                }
                ":precondition" => pre_e = Some(val),
                ":effect" => eff_e = Some(val),
                ":cost" => {
                    let t = expect_atom(val, "a cost")?;
                    cost = parse_number(t).filter(|c| *c >= 0.0).ok_or_else(|| err(format!("bad cost {t}"), val.span()))?;
                }
                _ => return Err(err(format!("unknown keyword {key}"), l[i].span()).expecting("an action keyword")),
            }
            i += 2;
        }
        let scope = Scope { preds: &pred_index, params: &params, constants: &const_index };
        let mut precondition = Vec::new();
        for (k, p) in params.iter().enumerate() {
            if let Some(t) = &p.ty {
                let (idx, _) = pred_index[t.as_str()];
                precondition.push(Condition::Atom {
                    atom: AtomTemplate::new(PredId::world(idx), [Term::Var(k)]),
                    positive: true,
                });
            }
        }
        if let Some(e) = pre_e {
            precondition.extend(scope.precondition(e)?);
        }
        let outcomes = match eff_e {
            Some(e) => scope.effect(e)?,
            None => vec![Outcome { probability: 1.0, add: Vec::new(), delete: Vec::new() }],
        };
        schemas.push(ActionSchema { name: aname.to_string(), params, precondition, outcomes, cost });
    }

    let mut domain = Domain::new(name, preds, schemas, types, constants).map_err(|e| err(e.to_string(), doc.span()))?;
    domain.requirements = requirements;
    Ok(domain)
}

/// A parsed problem instance: its universe and initial MDP state.
#[derive(Clone, Debug)]
pub struct Problem {
    pub name: String,
    pub universe: Universe,
    pub state: RelState,
}

fn ground_fact(
    e: &SExpr,
    domain: &Domain,
    universe: &Universe,
    kind: PredKind,
) -> Result<Fact, ParseError> {
    let l = expect_list(e, "a fact")?;
    let head = l.first().ok_or_else(|| err("empty fact", e.span()))?;
    let pname = expect_atom(head, "a predicate name")?;
    let pred = domain
        .predicates
        .lookup(pname)
        .filter(|p| p.kind == PredKind::World)
        .ok_or_else(|| err(format!("unknown predicate {pname}"), head.span()))?;
    let arity = domain.predicates.arity(pred);
    if l.len() - 1 != arity {
        return Err(err(format!("{pname} takes {arity} arguments, got {}", l.len() - 1), e.span()));
    }
    let args = l[1..]
        .iter()
        .map(|a| {
            let n = expect_atom(a, "an object")?;
            universe.get(n).ok_or_else(|| err(format!("unknown object {n}"), a.span()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Fact::new(pred.with_kind(kind), args))
}

/// Parse a problem file against a domain. Goal literals `p(..)` become goal
/// facts `gp(..)`; objects keep their declaration order after the domain
/// constants.
pub fn parse_problem(text: &str, domain: &Domain) -> Result<Problem, ParseError> {
    let top = parse_sexprs(text)?;
    let doc = match top.as_slice() {
        [d] => d,
        [] => return Err(err("empty document", Span { line: 1, col: 1 }).expecting("(define ...)")),
        [_, extra, ..] => return Err(err("trailing content after problem", extra.span())),
    };
    let items = expect_list(doc, "define")?;
    if items.first().and_then(SExpr::atom) != Some("define") {
        return Err(err("expected (define ...)", doc.span()).expecting("define"));
    }
    let name = match items.get(1).and_then(SExpr::list) {
        Some([h, n]) if h.atom() == Some("problem") => expect_atom(n, "a problem name")?.to_string(),
        _ => return Err(err("expected (problem NAME)", items.get(1).map(SExpr::span).unwrap_or(doc.span()))),
    };
    let mut universe = Universe::new();
    let mut world = Vec::new();
    for (c, t) in &domain.constants {
        let id = universe.push(c.clone()).map_err(|e| err(e.to_string(), doc.span()))?;
        if let Some(t) = t {
            for p in domain.type_closure(t).map_err(|e| err(e.to_string(), doc.span()))? {
                world.push(Fact::new(PredId::world(p), [id]));
            }
        }
    }
    let mut init_e = None;
    let mut goal_e = None;
    for sec in &items[2..] {
        let l = expect_list(sec, "a problem section")?;
        let key = l.first().and_then(SExpr::atom).unwrap_or("");
        match key {
            ":domain" => {
                let d = l.get(1).ok_or_else(|| err("missing domain name", sec.span()))?;
                let dn = expect_atom(d, "a domain name")?;
                if dn != domain.name {
                    return Err(err(format!("problem is for domain {dn}, not {}", domain.name), d.span()));
                }
            }
            ":objects" => {
                for (n, t, s) in typed_list(&l[1..])? {
                    let id = universe.push(n).map_err(|e| err(e.to_string(), s))?;
                    if let Some(t) = real_type(t) {
                        let closure = domain.type_closure(&t).map_err(|_| err(format!("unknown type {t}"), s))?;
                        for p in closure {
                            world.push(Fact::new(PredId::world(p), [id]));
                        }
                    }
                }
            }
            ":init" => init_e = Some(&l[1..]),
            ":goal" => goal_e = Some(l.get(1)),
            _ => return Err(err(format!("unknown keyword {key}"), sec.span()).expecting("a problem section")),
        }
    }
    for f in init_e.unwrap_or(&[]) {
        world.push(ground_fact(f, domain, &universe, PredKind::World)?);
    }
    let mut goal = Vec::new();
    if let Some(Some(g)) = goal_e {
        let lits: Vec<&SExpr> = match g.head() {
            Some("and") => g.list().unwrap()[1..].iter().collect(),
            None if g.list().is_some_and(|l| l.is_empty()) => Vec::new(),
            _ => vec![g],
        };
        for lit in lits {
            if lit.head() == Some("not") {
                return Err(err("goal literals must be positive", lit.span()));
            }
            goal.push(ground_fact(lit, domain, &universe, PredKind::Goal)?);
        }
    }
    Ok(Problem { name, universe, state: RelState::new(world, goal) })
}

/// Render a problem file that [`parse_problem`] reads back to the same state.
/// Objects are written untyped; type facts appear in the init section.
pub fn write_problem(name: &str, domain: &Domain, universe: &Universe, state: &RelState) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {name})");
    let _ = writeln!(out, "  (:domain {})", domain.name);
    let objects: Vec<&str> = universe.names()[domain.constants.len()..].iter().map(String::as_str).collect();
    let _ = writeln!(out, "  (:objects {})", objects.join(" "));
    let fact = |f: &Fact| {
        let mut s = format!("({}", domain.predicates.name(f.pred.with_kind(PredKind::World)));
        for a in &f.args {
            s.push(' ');
            s.push_str(universe.name(*a));
        }
        s.push(')');
        s
    };
    out.push_str("  (:init");
    for f in state.world() {
        let _ = write!(out, "\n    {}", fact(f));
    }
    out.push_str(")\n  (:goal (and");
    for f in state.goal() {
        let _ = write!(out, "\n    {}", fact(f));
    }
    out.push_str(")))\n");
    out
}
