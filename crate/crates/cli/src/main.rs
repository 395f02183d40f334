//! `lrw`: learn, evaluate and inspect decision-list policies for relational
//! planning domains.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use lrw_core::harness::{
    default_step_limit, enumerate_relational, evaluate_policy, exact_solve, lrw_api, GeneratorSampler, GeneratorSpec,
    LearnedPolicy, LrwConfig, RandomWalkSampler, ReportWriter, RwConfig, DEFAULT_NOOP_PROBABILITY, DEFAULT_STATE_CAP,
};
use lrw_core::learner::LearnerConfig;
use lrw_core::mdp::{FixedState, LeastActionPolicy, RelState, RelationalMdp, StateSampler};
use lrw_core::parser::{parse_domain, parse_policy_for, parse_problem, render_policy, write_problem, PolicyVocabulary};
use lrw_core::rng::{seeded, SimRng};
use lrw_core::rollout::{flatten, improved_trajectories, write_training_set, RolloutConfig, Selection};
use lrw_core::taxonomy::DecisionList;

#[derive(Parser)]
#[command(name = "lrw", version, about = "Policy learning for relational planning domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a policy with random-walk bootstrapped API.
    Learn(LearnArgs),
    /// Measure success ratio and average length of a policy.
    Evaluate(EvaluateArgs),
    /// Write sampled problems as PDDL.
    SampleProblems(SampleArgs),
    /// Dump rollout training examples as JSON lines.
    Rollout(RolloutArgs),
    /// Exact value tables for a small enumerable problem.
    SolveExact(SolveArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// PDDL domain file.
    #[arg(long, value_name = "FILE")]
    domain: Option<PathBuf>,
    /// PDDL problem file giving the objects and initial state (with --domain).
    #[arg(long, value_name = "FILE")]
    problem: Option<PathBuf>,
    /// Shipped generator: blocks, gripper or clearred.
    #[arg(long, value_name = "NAME")]
    generator: Option<String>,
    /// Generator size (blocks or balls).
    #[arg(long)]
    size: Option<usize>,
    /// Comma-separated goal predicates for random-walk problems.
    #[arg(long, value_name = "P,Q")]
    goal_preds: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct LearnArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 100)]
    trajectories: usize,
    #[arg(long, default_value_t = 1)]
    width: usize,
    #[arg(long, default_value_t = 50)]
    horizon: usize,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 3)]
    length: usize,
    #[arg(long, default_value_t = 5)]
    beam: usize,
    #[arg(long, default_value_t = 0.9)]
    tau: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 10_000)]
    max_walk: usize,
    #[arg(long, default_value_t = DEFAULT_NOOP_PROBABILITY)]
    noop_prob: f64,
    #[arg(long, default_value_t = 10)]
    iterations: usize,
    #[arg(long, default_value_t = 3)]
    patience: usize,
    #[arg(long, default_value_t = 100)]
    sr_samples: usize,
    #[arg(long, default_value_t = 2.0)]
    grid_factor: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Fixed step limit; max(4n, 200) by default.
    #[arg(long)]
    step_limit: Option<usize>,
    #[arg(long, value_name = "POLICY")]
    out: PathBuf,
    #[arg(long, value_name = "CSV")]
    report: Option<PathBuf>,
    /// JSON run summary; defaults to the report path with a .json extension.
    #[arg(long, value_name = "JSON")]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Policy file; the random policy when omitted.
    #[arg(long, value_name = "FILE")]
    policy: Option<PathBuf>,
    /// `rw:N` for random-walk problems, or a generator spec such as `blocks:8`.
    #[arg(long)]
    problems: String,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long)]
    step_limit: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_NOOP_PROBABILITY)]
    noop_prob: f64,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    problems: String,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = DEFAULT_NOOP_PROBABILITY)]
    noop_prob: f64,
    /// Output directory; problems go to standard output when omitted.
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct RolloutArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_name = "FILE")]
    policy: Option<PathBuf>,
    #[arg(long)]
    problems: String,
    #[arg(long, default_value_t = 10)]
    trajectories: usize,
    #[arg(long, default_value_t = 1)]
    width: usize,
    #[arg(long, default_value_t = 50)]
    horizon: usize,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Execute the least action within this margin of the best estimate.
    #[arg(long)]
    select_delta: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_NOOP_PROBABILITY)]
    noop_prob: f64,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_name = "FILE")]
    policy: Option<PathBuf>,
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    #[arg(long, default_value_t = 20)]
    horizon: usize,
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    state_cap: usize,
    /// Include full value tables in the output.
    #[arg(long)]
    tables: bool,
}

/// Initial-state distribution of a model.
#[derive(Clone)]
enum Base {
    Generator(GeneratorSampler),
    Fixed(FixedState<RelState>),
}

impl StateSampler<RelationalMdp> for Base {
    fn sample(&self, mdp: &RelationalMdp, rng: &mut SimRng) -> RelState {
        match self {
            Base::Generator(g) => g.sample(mdp, rng),
            Base::Fixed(f) => f.sample(mdp, rng),
        }
    }
}

struct Model {
    mdp: RelationalMdp,
    base: Base,
    generator: Option<GeneratorSpec>,
    goal_preds: Vec<String>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_model(args: &ModelArgs) -> Result<Model> {
    let explicit_goals = args.goal_preds.as_ref().map(|g| g.split(',').map(|s| s.trim().to_lowercase()).filter(|s| !s.is_empty()).collect::<Vec<_>>());
    match (&args.generator, &args.domain) {
        (Some(name), None) => {
            let size = args.size.ok_or_else(|| anyhow!("--generator needs --size"))?;
            let spec = GeneratorSpec::new(name, size)?;
            let goal_preds = explicit_goals.unwrap_or_else(|| spec.default_goal_predicates());
            Ok(Model { mdp: spec.mdp(), base: Base::Generator(GeneratorSampler(spec)), generator: Some(spec), goal_preds })
        }
        (None, Some(domain_path)) => {
            let problem_path = args.problem.as_ref().ok_or_else(|| anyhow!("--domain needs --problem"))?;
            let domain = parse_domain(&read(domain_path)?).map_err(|e| anyhow!("{}: {e}", domain_path.display()))?;
            let problem = parse_problem(&read(problem_path)?, &domain).map_err(|e| anyhow!("{}: {e}", problem_path.display()))?;
            let goal_preds = explicit_goals.unwrap_or_else(|| {
                let mut g: Vec<String> = problem.state.goal().iter().map(|f| domain.predicates.world_decls()[f.pred.index as usize].name.clone()).collect();
                g.sort();
                g.dedup();
                g
            });
            let mdp = RelationalMdp::new(Arc::new(domain), Arc::new(problem.universe))?;
            Ok(Model { mdp, base: Base::Fixed(FixedState(problem.state)), generator: None, goal_preds })
        }
        (Some(_), Some(_)) => bail!("use either --generator or --domain, not both"),
        (None, None) => bail!("one of --generator or --domain is required"),
    }
}

/// A problem distribution named on the command line.
#[derive(Clone)]
enum Source {
    Base(Base),
    Walk(RandomWalkSampler<Base>),
}

impl StateSampler<RelationalMdp> for Source {
    fn sample(&self, mdp: &RelationalMdp, rng: &mut SimRng) -> RelState {
        match self {
            Source::Base(b) => b.sample(mdp, rng),
            Source::Walk(w) => w.sample(mdp, rng),
        }
    }
}

fn problem_source(model: &Model, spec: &str, noop: f64) -> Result<(Source, usize)> {
    if let Some(n) = spec.strip_prefix("rw:") {
        let n: usize = n.parse().with_context(|| format!("bad walk length in {spec}"))?;
        let config = RwConfig { walk_length: n, noop_probability: noop, goal_predicates: model.goal_preds.clone() };
        config.validate(&model.mdp)?;
        return Ok((Source::Walk(RandomWalkSampler { initial: model.base.clone(), config }), n));
    }
    if spec == "generator" || spec == "init" {
        return Ok((Source::Base(model.base.clone()), 0));
    }
    let g: GeneratorSpec = spec.parse()?;
    if model.generator != Some(g) {
        bail!("problem spec {spec} does not match the loaded model");
    }
    Ok((Source::Base(Base::Generator(GeneratorSampler(g))), 0))
}

fn load_policy(path: Option<&PathBuf>, mdp: &RelationalMdp) -> Result<LearnedPolicy> {
    match path {
        None => Ok(LearnedPolicy::Random),
        Some(p) => {
            let list = parse_policy_for(&read(p)?, mdp).map_err(|e| anyhow!("{}: {e}", p.display()))?;
            Ok(LearnedPolicy::List(list))
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn learn(args: LearnArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let mut cfg = LrwConfig::new(model.goal_preds.clone());
    cfg.max_walk = args.max_walk;
    cfg.tau = args.tau;
    cfg.delta = args.delta;
    cfg.sr_samples = args.sr_samples;
    cfg.grid_factor = args.grid_factor;
    cfg.noop_probability = args.noop_prob;
    cfg.step_limit = args.step_limit;
    cfg.api.trajectories = args.trajectories;
    cfg.api.rollout = RolloutConfig { width: args.width, horizon: args.horizon, gamma: args.gamma, selection: Selection::Argmax };
    cfg.api.learner = LearnerConfig { max_depth: args.depth, max_literals: args.length, beam_width: args.beam, ..LearnerConfig::default() };
    cfg.api.rule_goal_predicates = Some(model.goal_preds.clone());
    cfg.api.max_iterations = args.iterations;
    cfg.api.stop_patience = args.patience;
    cfg.api.eval_samples = args.sr_samples;
    cfg.api.step_limit = args.step_limit.unwrap_or_else(|| default_step_limit(args.max_walk));

    let mut writer = match &args.report {
        Some(p) => Some(ReportWriter::new(create(p)?)),
        None => None,
    };
    let mut rng = seeded(args.model.seed);
    let outcome = lrw_api(&model.mdp, &model.base, &cfg, &mut rng, &mut |row| {
        if let Some(w) = writer.as_mut() {
            w.write(row)?;
        }
        Ok(())
    })?;
    drop(writer);

    let vocab = PolicyVocabulary::for_mdp(&model.mdp);
    let list = outcome.best.list().cloned().unwrap_or_else(DecisionList::default);
    let mut out = create(&args.out)?;
    out.write_all(render_policy(&list, &vocab).as_bytes())?;
    out.flush()?;

    let summary_path = args.summary.clone().or_else(|| args.report.as_ref().map(|r| r.with_extension("json")));
    if let Some(p) = summary_path {
        let summary = json!({
            "seed": args.model.seed,
            "domain": model.mdp.domain().name,
            "generator": model.generator.map(|g| g.to_string()),
            "config": cfg,
            "iterations": outcome.reports,
            "best": outcome.best_report,
            "rules": list.len(),
        });
        let mut f = create(&p)?;
        serde_json::to_writer_pretty(&mut f, &summary)?;
        writeln!(f)?;
        f.flush()?;
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let policy = load_policy(args.policy.as_ref(), &model.mdp)?;
    let (source, n) = problem_source(&model, &args.problems, args.noop_prob)?;
    let limit = args.step_limit.unwrap_or_else(|| default_step_limit(n));
    let mut rng = seeded(args.model.seed);
    let report = evaluate_policy(&model.mdp, &policy, &source, args.samples, limit, &mut rng);
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn sample_problems(args: SampleArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let (source, _) = problem_source(&model, &args.problems, args.noop_prob)?;
    let mut rng = seeded(args.model.seed);
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let stdout = io::stdout();
    for i in 0..args.count {
        let s = source.sample(&model.mdp, &mut rng);
        let name = format!("p{:04}", i + 1);
        let text = write_problem(&name, model.mdp.domain(), model.mdp.universe(), &s);
        match &args.out_dir {
            Some(dir) => fs::write(dir.join(format!("{name}.pddl")), text)?,
            None => {
                let mut out = stdout.lock();
                writeln!(out, "{text}")?;
            }
        }
    }
    Ok(())
}

fn rollout(args: RolloutArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let policy = load_policy(args.policy.as_ref(), &model.mdp)?;
    let (source, _) = problem_source(&model, &args.problems, args.noop_prob)?;
    let selection = match args.select_delta {
        Some(d) => Selection::Delta(d),
        None => Selection::Argmax,
    };
    let cfg = RolloutConfig { width: args.width, horizon: args.horizon, gamma: args.gamma, selection };
    if cfg.width == 0 || cfg.horizon == 0 || !(0.0..=1.0).contains(&cfg.gamma) {
        bail!("width and horizon must be positive and gamma in [0, 1]");
    }
    let mut rng = seeded(args.model.seed);
    let trajs = improved_trajectories(&model.mdp, &policy, &source, args.trajectories, &cfg, &mut rng);
    let examples = flatten(&trajs);
    let mut out = create(&args.out)?;
    write_training_set(&model.mdp, &examples, &mut out)?;
    out.flush()?;
    println!("{}", json!({ "trajectories": trajs.len(), "examples": examples.len() }));
    Ok(())
}

fn solve_exact(args: SolveArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let mut rng = seeded(args.model.seed);
    let start = model.base.sample(&model.mdp, &mut rng);
    let space = enumerate_relational(&model.mdp, std::slice::from_ref(&start), args.state_cap)?;
    let table = match args.policy.as_ref() {
        Some(_) => {
            let p = load_policy(args.policy.as_ref(), &model.mdp)?;
            space.tabulate(&model.mdp, &p, &mut rng)
        }
        None => space.tabulate(&model.mdp, &LeastActionPolicy, &mut rng),
    };
    if !(0.0..1.0).contains(&args.gamma) {
        bail!("gamma must lie in [0, 1) for exact evaluation");
    }
    let sol = exact_solve(&space.mdp, Some(&table), args.gamma, args.horizon);
    let fmt_action = |s: usize, a: usize| space.actions[s].get(a).map(|x| model.mdp.format_action(x));
    let mut summary = json!({
        "states": space.states.len(),
        "gamma": sol.gamma,
        "horizon": sol.horizon,
        "r_max": sol.r_max,
        "v_max": sol.v_max,
        "delta_star": sol.delta_star,
        "v_start": sol.v.first(),
        "v_h_start": sol.v_h.last().and_then(|v| v.first()),
        "policy_action_start": fmt_action(0, table[0]),
        "improved_action_start": fmt_action(0, sol.improved[0]),
    });
    if args.tables {
        let states: Vec<serde_json::Value> = (0..space.states.len())
            .map(|s| {
                json!({
                    "world": space.states[s].world().iter().map(|f| model.mdp.format_fact(f)).collect::<Vec<_>>(),
                    "v": sol.v[s],
                    "v_h": sol.v_h.last().unwrap()[s],
                    "q": space.actions[s].iter().zip(&sol.q[s]).map(|(a, q)| (model.mdp.format_action(a), *q)).collect::<Vec<_>>(),
                })
            })
            .collect();
        summary["tables"] = serde_json::Value::Array(states);
    }
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Learn(a) => learn(a),
        Command::Evaluate(a) => evaluate(a),
        Command::SampleProblems(a) => sample_problems(a),
        Command::Rollout(a) => rollout(a),
        Command::SolveExact(a) => solve_exact(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = json!({ "error": format!("{e:#}") });
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}

