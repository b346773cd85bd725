//! Experiment orchestration: resolved configurations, seeded parallel runs,
//! ablation-mode semantics, and CSV/JSON artifact emission.
//!
//! Every run directory carries a manifest with the exact resolved config,
//! seed list, and format versions, and re-running the same config produces
//! byte-identical artifacts.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::refs::Skill;
use crate::env::trace::{write_demo_csv, write_trace_csv, TRACE_SCHEMA};
use crate::env::{env_by_name, observe, reset, skill_env, step, success, EnvSpec, EpisodeTrace};
use crate::error::{Error, Result};
use crate::expert::{
    train_expert, CurvePoint, ExpertCheckpoint, RewardSource, TrainConfig, TrainedExpert,
};
use crate::harness::metrics;
use crate::harness::schedule::{default_letter_map, parse_schedule, StageSchedule};
use crate::numkit::{SeededRng, SimplexVector};
use crate::retarget::{feasibility_filter, PdTracker, DEFAULT_TRACKING_THRESHOLD};
use crate::router::{
    load_oracle, rollout_routed, train_router, DemoEpisode, DemoSet, Router, RouterCheckpoint,
    RouterTrainConfig, SemanticOracle,
};

pub const CURVE_SCHEMA: &str = "# skillweave curve v1";
pub const MANIFEST_VERSION: u32 = 1;

/// Which pipeline variant a run exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMode {
    /// Expert training, router distillation, then evaluation.
    Full,
    /// Compose with the oracle's phase prior directly; no learned router.
    NoRouter,
    /// Fixed stage-schedule routing; no oracle guidance, no learning.
    NoVlmRuleBased,
    /// Experts trained on raw task reward instead of the imitation reward,
    /// then router distillation as usual.
    NoIl,
    /// One policy trained on the composite task's raw reward.
    BaselineMonolithic,
}

impl AblationMode {
    pub const ALL: [AblationMode; 5] = [
        AblationMode::Full,
        AblationMode::NoRouter,
        AblationMode::NoVlmRuleBased,
        AblationMode::NoIl,
        AblationMode::BaselineMonolithic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AblationMode::Full => "full",
            AblationMode::NoRouter => "no_router",
            AblationMode::NoVlmRuleBased => "no_vlm_rule_based",
            AblationMode::NoIl => "no_il",
            AblationMode::BaselineMonolithic => "baseline_monolithic",
        }
    }
}

impl fmt::Display for AblationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AblationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(AblationMode::Full),
            "no_router" => Ok(AblationMode::NoRouter),
            "no_vlm_rule_based" => Ok(AblationMode::NoVlmRuleBased),
            "no_il" => Ok(AblationMode::NoIl),
            "baseline_monolithic" => Ok(AblationMode::BaselineMonolithic),
            other => Err(Error::UnknownTag {
                kind: "ablation mode",
                value: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Evaluation environment, e.g. "composite-door".
    pub env: String,
    /// Expert skills, in oracle/prior order.
    pub skills: Vec<Skill>,
    pub seeds: Vec<u64>,
    pub ablation_mode: AblationMode,
    /// Per-expert training budget in environment steps; zero loads
    /// checkpoints instead of training.
    pub budget_steps: usize,
    /// Budget for the monolithic baseline; defaults to
    /// `skills.len() * budget_steps`.
    pub baseline_budget_steps: Option<usize>,
    pub eval_episodes: usize,
    /// Demonstrations generated per seed for router distillation.
    pub demo_episodes: usize,
    pub oracle_path: Option<PathBuf>,
    /// Stage schedule text, e.g. "0.17(S) -> 0.74(W) -> 2.0(R)".
    pub schedule: Option<String>,
    /// Extra schedule letters beyond the built-in S/W/R.
    pub schedule_letters: BTreeMap<String, Skill>,
    /// Root of a previous run to load checkpoints from when budgets are zero.
    pub checkpoints_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub train: TrainConfig,
    pub router: RouterTrainConfig,
    /// Episode length for evaluation and any training left unset.
    pub episode_len: Option<usize>,
    pub convergence_tol: f64,
    pub convergence_window: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: "composite-door".into(),
            skills: vec![Skill::Stand, Skill::Walk, Skill::Reach],
            seeds: vec![0],
            ablation_mode: AblationMode::Full,
            budget_steps: 3000,
            baseline_budget_steps: None,
            eval_episodes: 5,
            demo_episodes: 4,
            oracle_path: None,
            schedule: None,
            schedule_letters: BTreeMap::new(),
            checkpoints_dir: None,
            out_dir: None,
            train: TrainConfig::default(),
            router: RouterTrainConfig::default(),
            episode_len: None,
            convergence_tol: 0.05,
            convergence_window: 3,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::EmptyInput("seed list"));
        }
        if self.skills.is_empty() {
            return Err(Error::EmptyInput("skill list"));
        }
        if self.convergence_window == 0 {
            return Err(Error::Invalid {
                what: "experiment config",
                detail: "convergence window must be >= 1".into(),
            });
        }
        Ok(())
    }

    /// Push top-level defaults down into the nested configs.
    pub fn resolved(&self) -> ExperimentConfig {
        let mut cfg = self.clone();
        if cfg.train.episode_len.is_none() {
            cfg.train.episode_len = cfg.episode_len;
        }
        if cfg.router.episode_len.is_none() {
            cfg.router.episode_len = cfg.episode_len;
        }
        cfg
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|_| Error::MissingPrerequisite(path.display().to_string()))?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }

    fn letter_map(&self) -> BTreeMap<String, Skill> {
        let mut m = default_letter_map();
        for (k, v) in &self.schedule_letters {
            m.insert(k.clone(), *v);
        }
        m
    }

    fn parsed_schedule(&self) -> Result<Option<StageSchedule>> {
        match &self.schedule {
            Some(text) => Ok(Some(parse_schedule(text, &self.letter_map())?)),
            None => Ok(None),
        }
    }
}

/// The four headline metrics for one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub peak_return: f64,
    pub stderr: f64,
    pub convergence_step: Option<usize>,
    pub success_rate: SuccessRate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuccessRate {
    pub successes: usize,
    pub trials: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    manifest_version: u32,
    mode: AblationMode,
    env: String,
    seeds: Vec<u64>,
    format_versions: FormatVersions,
    config: ExperimentConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FormatVersions {
    trace: String,
    curve: String,
    network: u32,
    expert: u32,
    router: u32,
    oracle: u32,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: MetricsRecord,
    pub out_dir: PathBuf,
    pub mode: AblationMode,
    /// Per-seed peak of the mode's evaluation curve, in seed order.
    pub per_seed_peak: Vec<f64>,
    /// Cross-seed mean curve as (step, mean) pairs.
    pub mean_curve: Vec<(usize, f64)>,
}

struct SeedOutcome {
    curve: Vec<CurvePoint>,
    successes: usize,
    trials: usize,
}

fn write_curve_csv(path: &Path, points: &[(usize, f64, f64, usize)]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{CURVE_SCHEMA}")?;
    let mut wtr = csv::Writer::from_writer(file);
    wtr.write_record(["step", "mean_return", "stderr", "n_seeds"])?;
    for (step, mean, se, n) in points {
        wtr.write_record(&[
            step.to_string(),
            format!("{mean}"),
            format!("{se}"),
            n.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Read a per-seed or aggregated curve CSV back into (step, mean_return).
pub fn read_curve_csv(path: &Path) -> Result<Vec<(usize, f64)>> {
    let file = std::fs::File::open(path)
        .map_err(|_| Error::MissingPrerequisite(path.display().to_string()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(file);
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let step: usize = record[0]
            .parse()
            .map_err(|e| Error::Parse(format!("curve step: {e}")))?;
        let mean: f64 = record[1]
            .parse()
            .map_err(|e| Error::Parse(format!("curve mean: {e}")))?;
        out.push((step, mean));
    }
    Ok(out)
}

fn write_loss_csv(path: &Path, points: &[(usize, f64)]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{CURVE_SCHEMA}")?;
    let mut wtr = csv::Writer::from_writer(file);
    wtr.write_record(["iter", "unified_loss"])?;
    for (iter, loss) in points {
        wtr.write_record(&[iter.to_string(), format!("{loss}")])?;
    }
    wtr.flush()?;
    Ok(())
}

fn seed_dir(out_dir: &Path, seed: u64) -> PathBuf {
    out_dir.join("seeds").join(seed.to_string())
}

fn expert_ckpt_path(root: &Path, seed: u64, skill: Skill) -> PathBuf {
    seed_dir(root, seed).join("experts").join(format!("{skill}.json"))
}

fn router_ckpt_path(root: &Path, seed: u64) -> PathBuf {
    seed_dir(root, seed).join("router.json")
}

/// Schedule-driven one-hot weigher over the configured expert order.
fn schedule_weights(
    schedule: &StageSchedule,
    skills: &[Skill],
    progress: f64,
) -> Result<SimplexVector> {
    let skill = schedule.skill_at_progress(progress);
    let idx = skills
        .iter()
        .position(|&s| s == skill)
        .ok_or_else(|| Error::Invalid {
            what: "stage schedule",
            detail: format!("schedule skill {skill} is not in the expert list"),
        })?;
    Ok(SimplexVector::one_hot(skills.len(), idx))
}

fn train_or_load_experts(
    cfg: &ExperimentConfig,
    mode: AblationMode,
    seed: u64,
    dir: &Path,
) -> Result<Vec<TrainedExpert>> {
    let mut experts = Vec::with_capacity(cfg.skills.len());
    let expert_dir = dir.join("experts");
    if cfg.budget_steps > 0 {
        std::fs::create_dir_all(&expert_dir)?;
    }
    for (idx, &skill) in cfg.skills.iter().enumerate() {
        if cfg.budget_steps == 0 {
            let root = cfg.checkpoints_dir.as_ref().ok_or_else(|| {
                Error::MissingPrerequisite(format!(
                    "expert checkpoint for '{skill}' (no training budget and no checkpoints_dir)"
                ))
            })?;
            let path = expert_ckpt_path(root, seed, skill);
            experts.push(ExpertCheckpoint::load(&path)?.into_expert()?);
            continue;
        }

        let sspec = skill_env(skill);
        let reference = sspec
            .reference
            .clone()
            .expect("skill environments carry a reference");
        let (kept, report) = feasibility_filter(
            &[reference],
            &sspec,
            &PdTracker::default(),
            DEFAULT_TRACKING_THRESHOLD,
        )?;
        let report_path = expert_dir.join(format!("{skill}_filter.json"));
        let file = std::fs::File::create(&report_path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), &report)?;
        let reference = kept.into_iter().next().ok_or_else(|| {
            Error::TrainingAbort(format!("reference for '{skill}' failed the feasibility filter"))
        })?;

        let mut tcfg = cfg.train.clone();
        tcfg.steps = cfg.budget_steps;
        if mode == AblationMode::NoIl {
            tcfg.reward_source = RewardSource::Task;
        }
        let train_seed = SeededRng::new(seed).derive(10 + idx as u64).seed();
        let (expert, curve) = train_expert(
            &sspec,
            Some(&reference),
            skill,
            &tcfg,
            train_seed,
        )?;
        ExpertCheckpoint::from_expert(&expert).save(&expert_dir.join(format!("{skill}.json")))?;
        let curve_rows: Vec<(usize, f64, f64, usize)> = curve
            .iter()
            .map(|p| (p.step, p.mean_return, p.stderr, 1))
            .collect();
        write_curve_csv(&expert_dir.join(format!("{skill}_curve.csv")), &curve_rows)?;
        experts.push(expert);
    }
    Ok(experts)
}

fn generate_demos(
    spec: &EnvSpec,
    experts: &[TrainedExpert],
    cfg: &ExperimentConfig,
    schedule: &StageSchedule,
    seed: u64,
    dir: &Path,
) -> Result<DemoSet> {
    let demo_dir = dir.join("demos");
    std::fs::create_dir_all(&demo_dir)?;
    let mut rng = SeededRng::new(seed).derive(200);
    let mut episodes = Vec::with_capacity(cfg.demo_episodes);
    for i in 0..cfg.demo_episodes {
        let mut weigher =
            |_obs: &[f64], phase: f64| schedule_weights(schedule, &cfg.skills, phase);
        let (trace, labels) = rollout_routed(spec, experts, &mut weigher, &mut rng)?;
        write_demo_csv(&demo_dir.join(format!("demo_{i}.csv")), spec, &trace, &labels)?;
        episodes.push(DemoEpisode { trace, labels });
    }
    Ok(DemoSet { episodes })
}

enum EvalActor<'a> {
    Routed {
        experts: &'a [TrainedExpert],
        router: &'a Router,
        embedding: &'a [f64],
    },
    PriorSchedule {
        experts: &'a [TrainedExpert],
        schedule: &'a crate::router::PhaseSchedule,
    },
    RuleSchedule {
        experts: &'a [TrainedExpert],
        schedule: &'a StageSchedule,
        skills: &'a [Skill],
    },
    Single(&'a TrainedExpert),
}

fn rollout_actor(spec: &EnvSpec, actor: &EvalActor, rng: &mut SeededRng) -> Result<EpisodeTrace> {
    match actor {
        EvalActor::Routed {
            experts,
            router,
            embedding,
        } => {
            let mut weigher = |obs: &[f64], _phase: f64| router.route(obs, embedding);
            Ok(rollout_routed(spec, experts, &mut weigher, rng)?.0)
        }
        EvalActor::PriorSchedule { experts, schedule } => {
            let mut weigher =
                |_obs: &[f64], phase: f64| Ok(schedule.at_phase(phase).clone());
            Ok(rollout_routed(spec, experts, &mut weigher, rng)?.0)
        }
        EvalActor::RuleSchedule {
            experts,
            schedule,
            skills,
        } => {
            let mut weigher =
                |_obs: &[f64], phase: f64| schedule_weights(schedule, skills, phase);
            Ok(rollout_routed(spec, experts, &mut weigher, rng)?.0)
        }
        EvalActor::Single(expert) => {
            let mut s = reset(spec, rng);
            let mut trace = EpisodeTrace::new(s.clone());
            loop {
                let obs = observe(spec, &s);
                let action = expert.action_from_obs(&obs)?;
                let r = step(spec, &s, &action)?;
                trace.push(action, &r);
                s = r.next;
                if r.done {
                    break;
                }
            }
            Ok(trace)
        }
    }
}

fn final_evaluation(
    spec: &EnvSpec,
    actor: &EvalActor,
    episodes: usize,
    seed: u64,
    dir: &Path,
) -> Result<(Vec<EpisodeTrace>, Vec<f64>)> {
    let trace_dir = dir.join("traces");
    std::fs::create_dir_all(&trace_dir)?;
    let root = SeededRng::new(seed).derive(300);
    let mut traces = Vec::with_capacity(episodes);
    let mut returns = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        let mut rng = root.derive(ep as u64);
        let trace = rollout_actor(spec, actor, &mut rng)?;
        returns.push(trace.total_reward());
        write_trace_csv(&trace_dir.join(format!("eval_{ep}.csv")), spec, &trace)?;
        traces.push(trace);
    }
    Ok((traces, returns))
}

/// Evaluate one expert alone on a composite environment: mean return and
/// success count over deterministic episodes.
pub fn evaluate_single_expert(
    spec: &EnvSpec,
    expert: &TrainedExpert,
    episodes: usize,
    seed: u64,
) -> Result<(f64, usize)> {
    let root = SeededRng::new(seed).derive(300);
    let mut total = 0.0;
    let mut successes = 0;
    for ep in 0..episodes {
        let mut rng = root.derive(ep as u64);
        let trace = rollout_actor(spec, &EvalActor::Single(expert), &mut rng)?;
        total += trace.total_reward();
        if success(spec, &trace) {
            successes += 1;
        }
    }
    Ok((total / episodes as f64, successes))
}

fn run_seed(cfg: &ExperimentConfig, out_dir: &Path, seed: u64) -> Result<SeedOutcome> {
    let dir = seed_dir(out_dir, seed);
    std::fs::create_dir_all(&dir)?;
    let mut eval_spec = env_by_name(&cfg.env)?;
    if let Some(len) = cfg.episode_len {
        eval_spec.episode_len = len;
    }
    eval_spec.validate()?;

    let mode = cfg.ablation_mode;
    let schedule = cfg.parsed_schedule()?;

    // The monolithic baseline has no expert pool.
    let experts = if mode == AblationMode::BaselineMonolithic {
        Vec::new()
    } else {
        train_or_load_experts(cfg, mode, seed, &dir)?
    };

    // Owners for whatever the chosen mode needs at evaluation time.
    struct ActorBits {
        oracle: Option<SemanticOracle>,
        router: Option<Router>,
        baseline: Option<TrainedExpert>,
    }

    let (curve, bits): (Vec<CurvePoint>, ActorBits) = match mode {
        AblationMode::Full | AblationMode::NoIl => {
            let oracle_path = cfg.oracle_path.as_ref().ok_or_else(|| {
                Error::MissingPrerequisite("oracle file (set oracle_path)".into())
            })?;
            let oracle = load_oracle(oracle_path)?;
            if oracle.n_experts() != cfg.skills.len() {
                return Err(Error::ShapeMismatch {
                    what: "oracle expert count",
                    expected: cfg.skills.len(),
                    got: oracle.n_experts(),
                });
            }
            let demos = match (&schedule, cfg.demo_episodes) {
                (Some(s), n) if n > 0 => {
                    generate_demos(&eval_spec, &experts, cfg, s, seed, &dir)?
                }
                _ => DemoSet { episodes: vec![] },
            };
            let router_seed = SeededRng::new(seed).derive(100).seed();
            let (router, curve) = if cfg.router.iters == 0 {
                // Evaluation-only: load a checkpoint when one is around,
                // otherwise keep the fresh initialization.
                let loaded = cfg
                    .checkpoints_dir
                    .as_ref()
                    .map(|root| router_ckpt_path(root, seed))
                    .filter(|p| p.exists())
                    .map(|p| RouterCheckpoint::load(&p)?.into_router())
                    .transpose()?;
                match loaded {
                    Some(router) => (router, Vec::new()),
                    None => {
                        let outcome = train_router(
                            &experts,
                            &eval_spec,
                            &oracle,
                            &demos,
                            &cfg.router,
                            router_seed,
                        )?;
                        (outcome.router, outcome.curve)
                    }
                }
            } else {
                let outcome = train_router(
                    &experts,
                    &eval_spec,
                    &oracle,
                    &demos,
                    &cfg.router,
                    router_seed,
                )?;
                RouterCheckpoint::from_router(&outcome.router)
                    .save(&router_ckpt_path(out_dir, seed))?;
                write_loss_csv(&dir.join("router_loss.csv"), &outcome.loss_curve)?;
                (outcome.router, outcome.curve)
            };
            (
                curve,
                ActorBits {
                    oracle: Some(oracle),
                    router: Some(router),
                    baseline: None,
                },
            )
        }
        AblationMode::NoRouter => {
            let oracle_path = cfg.oracle_path.as_ref().ok_or_else(|| {
                Error::MissingPrerequisite("oracle file (set oracle_path)".into())
            })?;
            let oracle = load_oracle(oracle_path)?;
            if oracle.n_experts() != cfg.skills.len() {
                return Err(Error::ShapeMismatch {
                    what: "oracle expert count",
                    expected: cfg.skills.len(),
                    got: oracle.n_experts(),
                });
            }
            (
                Vec::new(),
                ActorBits {
                    oracle: Some(oracle),
                    router: None,
                    baseline: None,
                },
            )
        }
        AblationMode::NoVlmRuleBased => {
            if schedule.is_none() {
                return Err(Error::MissingPrerequisite(
                    "stage schedule (set schedule)".into(),
                ));
            }
            (
                Vec::new(),
                ActorBits {
                    oracle: None,
                    router: None,
                    baseline: None,
                },
            )
        }
        AblationMode::BaselineMonolithic => {
            let budget = cfg
                .baseline_budget_steps
                .unwrap_or(cfg.skills.len() * cfg.budget_steps);
            let mut tcfg = cfg.train.clone();
            tcfg.steps = budget;
            tcfg.reward_source = RewardSource::Task;
            let train_seed = SeededRng::new(seed).derive(400).seed();
            let (policy, curve) = train_expert(
                &eval_spec,
                None,
                *cfg.skills.first().unwrap_or(&Skill::Stand),
                &tcfg,
                train_seed,
            )?;
            if budget > 0 {
                ExpertCheckpoint::from_expert(&policy).save(&dir.join("monolithic.json"))?;
            }
            (
                curve,
                ActorBits {
                    oracle: None,
                    router: None,
                    baseline: Some(policy),
                },
            )
        }
    };

    let actor = match mode {
        AblationMode::Full | AblationMode::NoIl => EvalActor::Routed {
            experts: &experts,
            router: bits.router.as_ref().expect("set by the mode arm"),
            embedding: &bits.oracle.as_ref().expect("set by the mode arm").embedding,
        },
        AblationMode::NoRouter => EvalActor::PriorSchedule {
            experts: &experts,
            schedule: &bits.oracle.as_ref().expect("set by the mode arm").demo_prior,
        },
        AblationMode::NoVlmRuleBased => EvalActor::RuleSchedule {
            experts: &experts,
            schedule: schedule.as_ref().expect("checked by the mode arm"),
            skills: &cfg.skills,
        },
        AblationMode::BaselineMonolithic => {
            EvalActor::Single(bits.baseline.as_ref().expect("set by the mode arm"))
        }
    };

    let (traces, returns) =
        final_evaluation(&eval_spec, &actor, cfg.eval_episodes, seed, &dir)?;
    let (successes, trials) = metrics::success_rate(&traces, &eval_spec);

    // Modes without a training curve report their final evaluation as a
    // single point so every run yields a curve artifact.
    let curve = if curve.is_empty() {
        let mean = returns.iter().sum::<f64>() / returns.len().max(1) as f64;
        let se = if returns.len() >= 2 {
            metrics::stderr(&returns)?
        } else {
            0.0
        };
        vec![CurvePoint {
            step: 0,
            mean_return: mean,
            stderr: se,
        }]
    } else {
        curve
    };

    let rows: Vec<(usize, f64, f64, usize)> = curve
        .iter()
        .map(|p| (p.step, p.mean_return, p.stderr, 1))
        .collect();
    write_curve_csv(&dir.join("curve.csv"), &rows)?;

    Ok(SeedOutcome {
        curve,
        successes,
        trials,
    })
}

/// Run one experiment: per-seed training/evaluation in parallel, then metric
/// aggregation and artifact emission. Returns the metrics record and the
/// per-seed peaks used for cross-mode comparisons.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let cfg = cfg.resolved();
    let out_dir = resolve_out_dir(&cfg);
    std::fs::create_dir_all(&out_dir)?;

    let manifest = Manifest {
        manifest_version: MANIFEST_VERSION,
        mode: cfg.ablation_mode,
        env: cfg.env.clone(),
        seeds: cfg.seeds.clone(),
        format_versions: FormatVersions {
            trace: TRACE_SCHEMA.trim_start_matches("# ").to_string(),
            curve: CURVE_SCHEMA.trim_start_matches("# ").to_string(),
            network: crate::numkit::NET_FORMAT_VERSION,
            expert: crate::expert::EXPERT_FORMAT_VERSION,
            router: crate::router::ROUTER_FORMAT_VERSION,
            oracle: crate::router::ORACLE_FORMAT_VERSION,
        },
        config: cfg.clone(),
    };
    let manifest_file = std::fs::File::create(out_dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(manifest_file), &manifest)?;

    // Seeds are independent; run them in parallel and join in seed order.
    let outcomes: Vec<SeedOutcome> = cfg
        .seeds
        .par_iter()
        .map(|&seed| run_seed(&cfg, &out_dir, seed))
        .collect::<Result<Vec<_>>>()?;

    // Align curves across seeds.
    let len = outcomes[0].curve.len();
    for o in &outcomes {
        if o.curve.len() != len {
            return Err(Error::ShapeMismatch {
                what: "per-seed curves",
                expected: len,
                got: o.curve.len(),
            });
        }
    }

    let per_seed_series: Vec<Vec<f64>> = outcomes
        .iter()
        .map(|o| o.curve.iter().map(|p| p.mean_return).collect())
        .collect();
    let peak = metrics::peak_return(&per_seed_series)?;

    let n_seeds = outcomes.len();
    let mut agg_rows = Vec::with_capacity(len);
    let mut mean_curve = Vec::with_capacity(len);
    for i in 0..len {
        let step = outcomes[0].curve[i].step;
        let values: Vec<f64> = per_seed_series.iter().map(|s| s[i]).collect();
        let mean = values.iter().sum::<f64>() / n_seeds as f64;
        let se = if n_seeds >= 2 {
            metrics::stderr(&values)?
        } else {
            0.0
        };
        agg_rows.push((step, mean, se, n_seeds));
        mean_curve.push((step, mean));
    }
    write_curve_csv(&out_dir.join("curve.csv"), &agg_rows)?;

    // Standard error at the evaluation point that achieves the peak mean.
    let peak_idx = mean_curve
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).expect("finite means"))
        .map(|(i, _)| i)
        .expect("nonempty curve");
    let peak_values: Vec<f64> = per_seed_series.iter().map(|s| s[peak_idx]).collect();
    let se = if n_seeds >= 2 {
        metrics::stderr(&peak_values)?
    } else {
        0.0
    };

    let convergence =
        metrics::convergence_step(&mean_curve, cfg.convergence_tol, cfg.convergence_window);
    let successes: usize = outcomes.iter().map(|o| o.successes).sum();
    let trials: usize = outcomes.iter().map(|o| o.trials).sum();

    let record = MetricsRecord {
        peak_return: peak,
        stderr: se,
        convergence_step: convergence,
        success_rate: SuccessRate { successes, trials },
    };
    let summary_file = std::fs::File::create(out_dir.join("summary.json"))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(summary_file), &record)?;

    let per_seed_peak = per_seed_series
        .iter()
        .map(|s| s.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();

    Ok(RunOutput {
        record,
        out_dir,
        mode: cfg.ablation_mode,
        per_seed_peak,
        mean_curve,
    })
}

fn resolve_out_dir(cfg: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = &cfg.out_dir {
        return dir.clone();
    }
    let root = std::env::var("SKILLWEAVE_OUT_ROOT").unwrap_or_else(|_| "runs".to_string());
    PathBuf::from(root).join(format!(
        "{}_{}",
        cfg.env.replace([':', '/'], "-"),
        cfg.ablation_mode
    ))
}
