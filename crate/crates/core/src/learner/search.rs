//! Beam search and set covering on precomputed literal masks.
//!
//! Every candidate literal is evaluated once per (example, legal action)
//! pair of its action type. A rule's extension is then the AND of bit masks,
//! and its score is accumulated in the same order as [`super::hvalue`], so
//! both paths agree exactly.

use std::collections::HashSet;

use rayon::prelude::*;

use super::{LearnError, LearnerConfig, ScoredRule, TrainingSet, Vocabulary};
use crate::mdp::SchemaId;
use crate::taxonomy::{enumerate_classes, ClassId, DecisionList, ExprArena, Interp, Literal, Rule};

const MAX_BEAM_ROUNDS: usize = 256;
const EXAMPLE_CHUNK: usize = 128;

type Mask = Vec<u64>;

fn and(a: &[u64], b: &[u64]) -> Mask {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

/// Literal masks for one action type.
struct TypeTable {
    schema: SchemaId,
    literals: Vec<Literal>,
    masks: Vec<Mask>,
    /// Example index of each pair.
    pair_example: Vec<u32>,
    pair_adv: Vec<f64>,
    /// Pair range of each example.
    ranges: Vec<(usize, usize)>,
    words: usize,
}

impl TypeTable {
    fn full(&self) -> Mask {
        let n = self.pair_example.len();
        let mut m = vec![u64::MAX; self.words];
        if n % 64 != 0 {
            m[self.words - 1] = (1u64 << (n % 64)) - 1;
        }
        m
    }

    fn active_mask(&self, active: &[bool]) -> Mask {
        let mut m = vec![0u64; self.words];
        for (e, &(lo, hi)) in self.ranges.iter().enumerate() {
            if active[e] {
                for p in lo..hi {
                    m[p / 64] |= 1 << (p % 64);
                }
            }
        }
        m
    }

    /// (hvalue, covered) of the pairs set in `mask & active`.
    fn score(&self, mask: &[u64], active: &[u64], cfg: &LearnerConfig) -> (f64, usize) {
        let mut total = 0.0;
        let mut covered = 0;
        let mut cur = u32::MAX;
        let mut adv = 0.0;
        for (i, (&m, &a)) in mask.iter().zip(active).enumerate() {
            let mut w = m & a;
            while w != 0 {
                let p = i * 64 + w.trailing_zeros() as usize;
                w &= w - 1;
                let e = self.pair_example[p];
                if e != cur {
                    if cur != u32::MAX {
                        covered += 1;
                        total += cfg.coverage_weight + cfg.advantage_weight * adv;
                    }
                    cur = e;
                    adv = 0.0;
                }
                adv += self.pair_adv[p];
            }
        }
        if cur != u32::MAX {
            covered += 1;
            total += cfg.coverage_weight + cfg.advantage_weight * adv;
        }
        (total, covered)
    }

    /// Examples with a set pair in `mask & active`.
    fn covered_examples(&self, mask: &[u64], active: &[u64]) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, (&m, &a)) in mask.iter().zip(active).enumerate() {
            let mut w = m & a;
            while w != 0 {
                let p = i * 64 + w.trailing_zeros() as usize;
                w &= w - 1;
                let e = self.pair_example[p] as usize;
                if out.last() != Some(&e) {
                    out.push(e);
                }
            }
        }
        out
    }
}

/// Precomputed literal masks of a training set, reusable across the rules
/// of one decision list.
pub struct RuleSearch<'d> {
    data: &'d TrainingSet,
    cfg: LearnerConfig,
    tables: Vec<TypeTable>,
}

impl<'d> RuleSearch<'d> {
    pub fn new(data: &'d TrainingSet, vocab: &Vocabulary, cfg: &LearnerConfig) -> Result<Self, LearnError> {
        cfg.validate()?;
        let types = data.action_types();
        let mut arena = ExprArena::new();
        let mut per_type: Vec<(SchemaId, usize, Vec<(Literal, ClassId)>)> = Vec::new();
        for &t in &types {
            let arity = data
                .examples()
                .iter()
                .flat_map(|e| e.actions.iter())
                .find(|a| a.schema == t)
                .map(|a| a.args.len())
                .unwrap_or(0);
            let mut lits = Vec::new();
            if arity > 0 {
                let classes = enumerate_classes(cfg.max_depth, arity, &vocab.unary, &vocab.binary, cfg.enumeration_cap)?;
                let ids: Vec<ClassId> = classes.iter().map(|c| arena.intern_class(c)).collect();
                for var in 0..arity {
                    for (c, &id) in classes.iter().zip(&ids) {
                        lits.push((Literal { var, expr: c.clone() }, id));
                    }
                }
            }
            per_type.push((t, arity, lits));
        }

        let n = data.object_count();
        let mut layouts = Vec::with_capacity(per_type.len());
        for (t, _, lits) in &per_type {
            let mut pair_example = Vec::new();
            let mut pair_adv = Vec::new();
            let mut ranges = Vec::with_capacity(data.len());
            for (e, ex) in data.examples().iter().enumerate() {
                let lo = pair_example.len();
                for (a, d) in ex.actions.iter().zip(&ex.advantages) {
                    if a.schema == *t {
                        pair_example.push(e as u32);
                        pair_adv.push(*d);
                    }
                }
                ranges.push((lo, pair_example.len()));
            }
            let words = pair_example.len().div_ceil(64).max(1);
            let masks: Vec<Mask> = vec![vec![0u64; words]; lits.len()];
            layouts.push((pair_example, pair_adv, ranges, words, masks));
        }
        for chunk in (0..data.len()).collect::<Vec<_>>().chunks(EXAMPLE_CHUNK) {
            // Per example and type: bits laid out literal-major over the
            // example's legal actions of that type.
            let rows: Vec<Vec<Vec<bool>>> = chunk
                .par_iter()
                .map(|&e| {
                    let ex = &data.examples()[e];
                    let mut interp = Interp::new(&arena, &ex.view, n);
                    per_type
                        .iter()
                        .map(|(t, _, lits)| {
                            let acts: Vec<_> = ex.actions.iter().filter(|a| a.schema == *t).collect();
                            let mut bits = Vec::with_capacity(lits.len() * acts.len());
                            for (lit, id) in lits {
                                for a in &acts {
                                    bits.push(interp.member(*id, &a.args, a.args[lit.var]).unwrap_or(false));
                                }
                            }
                            bits
                        })
                        .collect()
                })
                .collect();
            for (ti, layout) in layouts.iter_mut().enumerate() {
                let ranges = &layout.2;
                layout.4.par_iter_mut().enumerate().for_each(|(li, m)| {
                    for (ci, &e) in chunk.iter().enumerate() {
                        let (lo, hi) = ranges[e];
                        let k = hi - lo;
                        for (j, &b) in rows[ci][ti][li * k..(li + 1) * k].iter().enumerate() {
                            if b {
                                let p = lo + j;
                                m[p / 64] |= 1 << (p % 64);
                            }
                        }
                    }
                });
            }
        }

        let mut tables = Vec::with_capacity(per_type.len());
        for ((t, _, lits), (pair_example, pair_adv, ranges, words, masks)) in per_type.into_iter().zip(layouts) {
            let mut table = TypeTable { schema: t, literals: Vec::new(), masks: Vec::new(), pair_example, pair_adv, ranges, words };
            // Keep the first literal of each distinct mask; a literal true on
            // every pair never changes a rule's score.
            let full = table.full();
            let mut seen: HashSet<Mask> = HashSet::new();
            for ((lit, _), m) in lits.into_iter().zip(masks) {
                if m == full || seen.contains(&m) {
                    continue;
                }
                seen.insert(m.clone());
                table.literals.push(lit);
                table.masks.push(m);
            }
            tables.push(table);
        }
        Ok(RuleSearch { data, cfg: cfg.clone(), tables })
    }

    fn table(&self, t: SchemaId) -> Option<&TypeTable> {
        self.tables.iter().find(|x| x.schema == t)
    }

    /// Distinct literals (per action type) after mask deduplication.
    pub fn literal_count(&self, t: SchemaId) -> usize {
        self.table(t).map_or(0, |x| x.literals.len())
    }

    fn beam(&self, table: &TypeTable, active: &[bool]) -> (ScoredRule, Mask) {
        let cfg = &self.cfg;
        let act = table.active_mask(active);
        let empty_mask = table.full();
        let (h0, c0) = table.score(&empty_mask, &act, cfg);
        // (literal indices, mask, hvalue, covered)
        let mut beam: Vec<(Vec<usize>, Mask, f64, usize)> = vec![(Vec::new(), empty_mask, h0, c0)];
        for _ in 0..MAX_BEAM_ROUNDS {
            let ext: Vec<(usize, usize)> = beam
                .iter()
                .enumerate()
                .filter(|(_, m)| m.0.len() < cfg.max_literals)
                .flat_map(|(bi, m)| (0..table.literals.len()).filter(move |li| !m.0.contains(li)).map(move |li| (bi, li)))
                .collect();
            let scores: Vec<(f64, usize)> = ext
                .par_iter()
                .map(|&(bi, li)| table.score(&and(&beam[bi].1, &table.masks[li]), &act, cfg))
                .collect();
            // Candidates in enumeration order: the current beam, then its
            // one-literal extensions.
            let mut cands: Vec<(usize, f64, usize)> = Vec::with_capacity(beam.len() + ext.len());
            for (i, m) in beam.iter().enumerate() {
                cands.push((i, m.2, m.0.len()));
            }
            for (k, &(bi, _)) in ext.iter().enumerate() {
                cands.push((beam.len() + k, scores[k].0, beam[bi].0.len() + 1));
            }
            cands.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.2.cmp(&y.2)));
            let mut next: Vec<(Vec<usize>, Mask, f64, usize)> = Vec::new();
            for &(ci, h, _) in &cands {
                if next.len() == cfg.beam_width {
                    break;
                }
                if next.iter().any(|m| m.2 == h) {
                    continue;
                }
                if ci < beam.len() {
                    next.push(beam[ci].clone());
                } else {
                    let (bi, li) = ext[ci - beam.len()];
                    let mut lits = beam[bi].0.clone();
                    lits.push(li);
                    next.push((lits, and(&beam[bi].1, &table.masks[li]), h, scores[ci - beam.len()].1));
                }
            }
            debug_assert!(next.iter().enumerate().all(|(i, x)| next[..i].iter().all(|y| y.2 != x.2)));
            let key = |b: &[(Vec<usize>, Mask, f64, usize)]| {
                let mut k: Vec<Vec<usize>> = b
                    .iter()
                    .map(|m| {
                        let mut s = m.0.clone();
                        s.sort();
                        s
                    })
                    .collect();
                k.sort();
                k
            };
            let done = key(&next) == key(&beam);
            beam = next;
            if done {
                break;
            }
        }
        let best = beam.swap_remove(0);
        let rule = Rule { action: table.schema, literals: best.0.iter().map(|&i| table.literals[i].clone()).collect() };
        let covered_mask = and(&best.1, &act);
        (ScoredRule { rule, hvalue: best.2, covered: best.3 }, covered_mask)
    }

    /// Beam search for a rule of action type `t` over the active examples.
    pub fn beam_search(&self, t: SchemaId, active: &[bool]) -> ScoredRule {
        match self.table(t) {
            Some(table) => self.beam(table, active).0,
            None => ScoredRule { rule: Rule::empty(t), hvalue: 0.0, covered: 0 },
        }
    }

    /// Best beam-search result over all action types, the least type on ties.
    /// Also returns the examples the rule covers.
    pub fn learn_rule(&self, active: &[bool]) -> Option<(ScoredRule, Vec<usize>)> {
        let mut best: Option<(ScoredRule, Vec<usize>)> = None;
        for table in &self.tables {
            let (r, mask) = self.beam(table, active);
            if best.as_ref().is_none_or(|b| r.hvalue > b.0.hvalue) {
                let cov = table.covered_examples(&mask, &mask);
                best = Some((r, cov));
            }
        }
        best
    }

    /// Set covering: learn a rule, drop the examples it covers, repeat until
    /// none remain or the best rule covers nothing.
    pub fn learn_decision_list(&self) -> DecisionList {
        let mut active = vec![true; self.data.len()];
        let mut remaining = self.data.len();
        let mut rules = Vec::new();
        while remaining > 0 {
            let Some((r, cov)) = self.learn_rule(&active) else { break };
            if r.covered == 0 {
                break;
            }
            for e in cov {
                if active[e] {
                    active[e] = false;
                    remaining -= 1;
                }
            }
            rules.push(r.rule);
        }
        DecisionList::new(rules)
    }
}

/// Beam search for a rule of action type `t` over all of `d`.
pub fn beam_search(d: &TrainingSet, vocab: &Vocabulary, cfg: &LearnerConfig, t: SchemaId) -> Result<ScoredRule, LearnError> {
    let s = RuleSearch::new(d, vocab, cfg)?;
    Ok(s.beam_search(t, &vec![true; d.len()]))
}

/// The best rule over all action types present in `d`.
pub fn learn_rule(d: &TrainingSet, vocab: &Vocabulary, cfg: &LearnerConfig) -> Result<Option<ScoredRule>, LearnError> {
    let s = RuleSearch::new(d, vocab, cfg)?;
    Ok(s.learn_rule(&vec![true; d.len()]).map(|x| x.0))
}

pub fn learn_decision_list(d: &TrainingSet, vocab: &Vocabulary, cfg: &LearnerConfig) -> Result<DecisionList, LearnError> {
    if d.is_empty() {
        return Ok(DecisionList::default());
    }
    Ok(RuleSearch::new(d, vocab, cfg)?.learn_decision_list())
}
