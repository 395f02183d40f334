//! Approximate policy iteration with a taxonomic decision-list policy
//! language, bootstrapped from random-walk problem distributions.

pub mod harness;
pub mod learner;
pub mod mdp;
pub mod parser;
pub mod rng;
pub mod rollout;
pub mod taxonomy;
