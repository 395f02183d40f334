#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use lrw_core::harness::builtin_domain;
use lrw_core::mdp::{Fact, RelState, RelationalMdp, Universe};
use lrw_core::parser::parse_domain;

pub fn fixture(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name].iter().collect();
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn builtin_mdp(domain: &str, objects: &[&str]) -> RelationalMdp {
    let d = builtin_domain(domain).unwrap();
    RelationalMdp::new(Arc::new(d), Arc::new(Universe::from_names(objects.iter().copied()).unwrap())).unwrap()
}

pub fn text_mdp(domain_text: &str, objects: &[&str]) -> RelationalMdp {
    let d = parse_domain(domain_text).unwrap();
    RelationalMdp::new(Arc::new(d), Arc::new(Universe::from_names(objects.iter().copied()).unwrap())).unwrap()
}

pub fn facts(mdp: &RelationalMdp, texts: &[&str]) -> Vec<Fact> {
    texts.iter().map(|t| mdp.parse_fact(t).unwrap()).collect()
}

/// State from world facts and goals written with world predicate names.
pub fn state(mdp: &RelationalMdp, world: &[&str], goal: &[&str]) -> RelState {
    mdp.make_state(facts(mdp, world), facts(mdp, goal))
}
