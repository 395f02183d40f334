//! Problem distributions, evaluation, the learning drivers and exact oracles.

mod api;
mod domains;
mod eval;
mod rw;
mod tabular;

use thiserror::Error;

pub use api::{
    api, api_step, lrw_api, ApiConfig, ApiOutcome, IterationReport, LearnedPolicy, LrwConfig, LrwOutcome, ReportWriter,
    StepStats,
};
pub use domains::{
    builtin_domain, builtin_domain_text, random_towers, valid_towers, GeneratorKind, GeneratorSampler, GeneratorSpec,
    BLOCKS_PDDL, BRIEFCASE_PDDL, CLEARRED_PDDL, GRIPPER_PDDL,
};
pub use eval::{default_step_limit, draw_problems, evaluate_on, evaluate_policy, run_episode, EvalReport};
pub use rw::{sample_rw_problem, ProblemSet, RandomWalkSampler, RwConfig, DEFAULT_NOOP_PROBABILITY};
pub use tabular::{
    enumerate_relational, evaluate_exact, exact_solve, finite_horizon, improve, q_advantage_gap, q_from_v, random_mdp,
    Enumerated, ExactSolution, TabularMdp, TabularPolicy, DEFAULT_STATE_CAP, VALUE_TOLERANCE,
};

use crate::learner::LearnError;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("state space exceeds the cap of {0} states")]
    StateCap(usize),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("io: {0}")]
    Io(String),
}
