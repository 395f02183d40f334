//! Text format for decision-list policies, one rule per line:
//!
//! ```text
//! putdown: (x1 in holding)
//! pickup: (x1 in clear) & (x1 in (on^* (on red)))
//! ```
//!
//! `∈`/`in` and `∧`/`&` are interchangeable and the conjunction sign may be
//! omitted. Relation suffixes: `⁻¹` `^-1` (inverse), `*` `^*` (star) and
//! `⁻*` `^-*` (star of the inverse). `universal` is read as `a-thing`.
//! Leading rule numbers such as `3.` and `#` comments are ignored.

use std::collections::HashMap;

use super::{ParseError, Span};
use crate::mdp::{ActionSchema, PredId, PredicateTable, RelationalMdp, SchemaId};
use crate::taxonomy::{ClassExpr, DecisionList, Literal, RelExpr, Rule};

/// Names usable in policies: unary and binary predicates of every kind and
/// the action schemas.
#[derive(Clone, Debug)]
pub struct PolicyVocabulary {
    unary: HashMap<String, PredId>,
    binary: HashMap<String, PredId>,
    schemas: HashMap<String, (SchemaId, usize)>,
    pred_names: PredicateTable,
    schema_names: Vec<String>,
}

impl PolicyVocabulary {
    pub fn new(preds: &PredicateTable, schemas: &[ActionSchema]) -> Self {
        let mut unary = HashMap::new();
        let mut binary = HashMap::new();
        for arity in [1usize, 2] {
            for id in preds.with_arity(arity) {
                let target = if arity == 1 { &mut unary } else { &mut binary };
                target.insert(preds.name(id).to_string(), id);
            }
        }
        let schemas_map = schemas
            .iter()
            .enumerate()
            .map(|(i, s)| (s.name.clone(), (SchemaId(i as u32), s.arity())))
            .collect();
        PolicyVocabulary {
            unary,
            binary,
            schemas: schemas_map,
            pred_names: preds.clone(),
            schema_names: schemas.iter().map(|s| s.name.clone()).collect(),
        }
    }

    pub fn for_mdp(mdp: &RelationalMdp) -> Self {
        Self::new(mdp.policy_predicates(), &mdp.domain().schemas)
    }

    pub fn schema_arity(&self, id: SchemaId) -> usize {
        self.schemas[&self.schema_names[id.0 as usize]].1
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Open,
    Close,
    Colon,
    In,
    And,
    Word(String),
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '-' | '_' | '.' | '^' | '*' | '⁻' | '¹' | '{' | '}' | '<' | '>' | ',')
}

fn tokenize_line(line: &str, lineno: usize) -> Result<Vec<(Tok, Span)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line: lineno, col: i + 1 };
        match c {
            '#' => break,
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push((Tok::Open, span));
                i += 1;
            }
            ')' => {
                out.push((Tok::Close, span));
                i += 1;
            }
            ':' => {
                out.push((Tok::Colon, span));
                i += 1;
            }
            '∈' => {
                out.push((Tok::In, span));
                i += 1;
            }
            '∧' | '&' | ',' => {
                out.push((Tok::And, span));
                i += 1;
            }
            c if is_word_char(c) => {
                let start = i;
                while i < chars.len() && is_word_char(chars[i]) && chars[i] != ',' {
                    i += 1;
                }
                let w: String = chars[start..i].iter().flat_map(|c| c.to_lowercase()).collect();
                // "in" stays a word: it is also a predicate name in some
                // domains, so the literal parser decides
                let tok = match w.as_str() {
                    "and" => Tok::And,
                    _ => Tok::Word(w),
                };
                out.push((tok, span));
            }
            other => {
                return Err(ParseError::new(format!("unexpected character '{other}'"), span));
            }
        }
    }
    Ok(out)
}

struct LineParser<'a> {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    vocab: &'a PolicyVocabulary,
    end: Span,
}

const SUFFIXES: &[(&str, &[bool])] = &[
    // true = inverse, false = star, applied in order
    ("^{-*}", &[true, false]),
    ("^{-1}", &[true]),
    ("^{*}", &[false]),
    ("^-*", &[true, false]),
    ("^-1", &[true]),
    ("^*", &[false]),
    ("⁻*", &[true, false]),
    ("⁻¹", &[true]),
    ("*", &[false]),
];

impl LineParser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn span(&self) -> Span {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<(Tok, Span)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Span, ParseError> {
        let span = self.span();
        match self.bump() {
            Some((t, s)) if t == want => Ok(s),
            Some(_) => Err(ParseError::new(format!("unexpected token, wanted {what}"), span).expecting(what)),
            None => Err(ParseError::new("unexpected end of line", span).expecting(what)),
        }
    }

    fn var_index(w: &str) -> Option<usize> {
        let digits = w.strip_prefix('x')?;
        let k: usize = digits.parse().ok()?;
        (k >= 1).then_some(k - 1)
    }

    fn relation(&self, word: &str, span: Span) -> Result<RelExpr, ParseError> {
        let cut = word.find(['^', '*', '⁻']).unwrap_or(word.len());
        let (base, mut rest) = word.split_at(cut);
        let p = *self
            .vocab
            .binary
            .get(base)
            .ok_or_else(|| ParseError::new(format!("unknown relation {base}"), span).expecting("a binary predicate"))?;
        let mut r = RelExpr::Prim(p);
        while !rest.is_empty() {
            let Some((suf, ops)) = SUFFIXES.iter().find(|(s, _)| rest.starts_with(s)) else {
                return Err(ParseError::new(format!("bad relation suffix {rest}"), span).expecting("^-1, ^* or ^-*"));
            };
            for &inv in *ops {
                r = if inv { r.inverse() } else { r.star() };
            }
            rest = &rest[suf.len()..];
        }
        Ok(r)
    }

    fn class(&mut self, arity: usize) -> Result<ClassExpr, ParseError> {
        let span = self.span();
        match self.bump() {
            Some((Tok::Word(w), s)) => self.class_word(&w, s, arity),
            Some((Tok::Open, _)) => {
                let inner_span = self.span();
                let expr = match self.bump() {
                    Some((Tok::Word(w), _)) if w == "not" => self.class(arity)?.not(),
                    Some((Tok::Word(w), _)) if w == "min" => {
                        let rs = self.span();
                        match self.bump() {
                            Some((Tok::Word(r), _)) => ClassExpr::Min(self.relation(&r, rs)?),
                            _ => return Err(ParseError::new("expected a relation after min", rs).expecting("a relation")),
                        }
                    }
                    Some((Tok::Word(w), s)) => {
                        if self.peek() == Some(&Tok::Close) {
                            // a parenthesized class name, e.g. "(bottomcol)"
                            self.class_word(&w, s, arity)?
                        } else {
                            let r = self.relation(&w, s)?;
                            let c = self.class(arity)?;
                            ClassExpr::apply(r, c)
                        }
                    }
                    _ => {
                        return Err(ParseError::new("expected not, min or a relation", inner_span)
                            .expecting("not, min or a relation"))
                    }
                };
                self.expect(Tok::Close, "')'")?;
                Ok(expr)
            }
            _ => Err(ParseError::new("expected a class expression", span).expecting("a class expression")),
        }
    }

    fn class_word(&self, w: &str, s: Span, arity: usize) -> Result<ClassExpr, ParseError> {
        if w == "a-thing" || w == "universal" {
            return Ok(ClassExpr::AThing);
        }
        if let Some(i) = Self::var_index(w) {
            if i >= arity {
                return Err(ParseError::new(format!("variable {w} exceeds action arity {arity}"), s));
            }
            return Ok(ClassExpr::Var(i));
        }
        self.vocab
            .unary
            .get(w)
            .map(|&p| ClassExpr::Prim(p))
            .ok_or_else(|| ParseError::new(format!("unknown class {w}"), s).expecting("a unary predicate"))
    }

    fn literal(&mut self, arity: usize) -> Result<Literal, ParseError> {
        self.expect(Tok::Open, "'('")?;
        let vs = self.span();
        let var = match self.bump() {
            Some((Tok::Word(w), _)) => Self::var_index(&w)
                .ok_or_else(|| ParseError::new(format!("expected a variable, got {w}"), vs).expecting("x1, x2, ..."))?,
            _ => return Err(ParseError::new("expected a variable", vs).expecting("x1, x2, ...")),
        };
        if var >= arity {
            return Err(ParseError::new(format!("variable x{} exceeds action arity {arity}", var + 1), vs));
        }
        let is = self.span();
        match self.bump() {
            Some((Tok::In, _)) => {}
            Some((Tok::Word(w), _)) if w == "in" => {}
            _ => return Err(ParseError::new("unexpected token, wanted '∈' or 'in'", is).expecting("'∈' or 'in'")),
        }
        let expr = self.class(arity)?;
        self.expect(Tok::Close, "')'")?;
        Ok(Literal { var, expr })
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        if let Some(Tok::Word(w)) = self.peek() {
            let w = w.trim_end_matches(['.', ')']);
            if !w.is_empty() && w.chars().all(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        let span = self.span();
        let name = match self.bump() {
            Some((Tok::Word(w), _)) => w,
            _ => return Err(ParseError::new("expected an action name", span).expecting("an action name")),
        };
        let &(action, arity) = self
            .vocab
            .schemas
            .get(&name)
            .ok_or_else(|| ParseError::new(format!("unknown action {name}"), span).expecting("an action name"))?;
        self.expect(Tok::Colon, "':'")?;
        let mut literals = Vec::new();
        while self.peek().is_some() {
            if !literals.is_empty() && self.peek() == Some(&Tok::And) {
                self.pos += 1;
            }
            literals.push(self.literal(arity)?);
        }
        Ok(Rule { action, literals })
    }
}

/// Parse a policy against a vocabulary.
pub fn parse_policy(text: &str, vocab: &PolicyVocabulary) -> Result<DecisionList, ParseError> {
    let mut rules = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let toks = tokenize_line(line, i + 1)?;
        if toks.is_empty() {
            continue;
        }
        let end = Span { line: i + 1, col: line.chars().count() + 1 };
        let mut p = LineParser { toks, pos: 0, vocab, end };
        rules.push(p.rule()?);
    }
    Ok(DecisionList::new(rules))
}

pub fn parse_policy_for(text: &str, mdp: &RelationalMdp) -> Result<DecisionList, ParseError> {
    parse_policy(text, &PolicyVocabulary::for_mdp(mdp))
}

fn render_rel(r: &RelExpr, vocab: &PolicyVocabulary, out: &mut String) {
    match r {
        RelExpr::Prim(p) => out.push_str(vocab.pred_names.name(*p)),
        RelExpr::Star(x) => match x.as_ref() {
            RelExpr::Inverse(y) => {
                render_rel(y, vocab, out);
                out.push_str("^-*");
            }
            _ => {
                render_rel(x, vocab, out);
                out.push_str("^*");
            }
        },
        RelExpr::Inverse(x) => {
            render_rel(x, vocab, out);
            out.push_str("^-1");
        }
    }
}

fn render_class(c: &ClassExpr, vocab: &PolicyVocabulary, out: &mut String) {
    match c {
        ClassExpr::Prim(p) => out.push_str(vocab.pred_names.name(*p)),
        ClassExpr::Var(i) => out.push_str(&format!("x{}", i + 1)),
        ClassExpr::AThing => out.push_str("a-thing"),
        ClassExpr::Not(x) => {
            out.push_str("(not ");
            render_class(x, vocab, out);
            out.push(')');
        }
        ClassExpr::Apply(r, x) => {
            out.push('(');
            render_rel(r, vocab, out);
            out.push(' ');
            render_class(x, vocab, out);
            out.push(')');
        }
        ClassExpr::Min(r) => {
            out.push_str("(min ");
            render_rel(r, vocab, out);
            out.push(')');
        }
    }
}

pub fn render_rule(rule: &Rule, vocab: &PolicyVocabulary) -> String {
    let mut out = format!("{}:", vocab.schema_names[rule.action.0 as usize]);
    for (i, l) in rule.literals.iter().enumerate() {
        out.push_str(if i == 0 { " " } else { " & " });
        out.push_str(&format!("(x{} in ", l.var + 1));
        render_class(&l.expr, vocab, &mut out);
        out.push(')');
    }
    out
}

/// Canonical text of a decision list, one rule per line.
pub fn render_policy(list: &DecisionList, vocab: &PolicyVocabulary) -> String {
    let mut out = String::new();
    for r in list.rules() {
        out.push_str(&render_rule(r, vocab));
        out.push('\n');
    }
    out
}
