//! Semantic routing over a pool of frozen skill experts.
//!
//! A small network maps (observation ++ task embedding) to a weight
//! distribution over experts. It is trained by distillation against a
//! file-based semantic oracle: a task-level prior aligns the router globally,
//! a demonstration-level prior extracted from labeled traces refines its
//! temporal structure, and a decaying coefficient hands control from the
//! former to the latter. At inference the router is a pure function; the
//! oracle file is never touched after loading.

pub mod train;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::trace::EpisodeTrace;
use crate::error::{Error, Result};
use crate::expert::TrainedExpert;
use crate::numkit::{
    entropy_categorical, kl_categorical, kl_softmax_grad, neg_entropy_softmax_grad, softmax,
    Activation, DenseNet, NetCheckpoint, SeededRng, SimplexVector,
};
use crate::planner::concat;

pub use train::{rollout_routed, train_router, RouterTrainConfig, RouterTrainOutcome};

pub const ROUTER_FORMAT_VERSION: u32 = 1;
pub const ORACLE_FORMAT_VERSION: u32 = 1;

/// Tolerance for renormalizing slightly-off simplex fields in oracle files.
pub const ORACLE_SIMPLEX_TOL: f64 = 1e-6;

/// Routing network over K experts.
#[derive(Debug, Clone)]
pub struct Router {
    pub net: DenseNet,
    pub n_experts: usize,
    pub embedding_len: usize,
}

impl Router {
    pub fn init(
        obs_dim: usize,
        embedding_len: usize,
        n_experts: usize,
        hidden: &[usize],
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let mut sizes = vec![obs_dim + embedding_len];
        sizes.extend(hidden);
        sizes.push(n_experts);
        Ok(Self {
            net: DenseNet::init(&sizes, Activation::Tanh, rng)?,
            n_experts,
            embedding_len,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.net.in_dim() - self.embedding_len
    }

    /// Expert weights for an observation under the cached task embedding.
    /// Deterministic; always a valid distribution.
    pub fn route(&self, obs: &[f64], embedding: &[f64]) -> Result<SimplexVector> {
        if embedding.len() != self.embedding_len {
            return Err(Error::ShapeMismatch {
                what: "router embedding",
                expected: self.embedding_len,
                got: embedding.len(),
            });
        }
        let logits = self.net.forward(&concat(obs, embedding))?;
        Ok(softmax(&logits))
    }
}

/// Blend of expert mean actions under the given weights, clipped to the
/// action limits. Zero-weight experts are never evaluated, so one-hot
/// weights reproduce the selected expert's action bit-for-bit.
pub fn compose_action(
    experts: &[TrainedExpert],
    w: &SimplexVector,
    obs: &[f64],
    action_limits: &[[f64; 2]],
) -> Result<Vec<f64>> {
    if w.len() != experts.len() {
        return Err(Error::ShapeMismatch {
            what: "composition weights",
            expected: experts.len(),
            got: w.len(),
        });
    }
    let mut action = vec![0.0; action_limits.len()];
    for (wi, expert) in w.as_slice().iter().zip(experts) {
        if *wi == 0.0 {
            continue;
        }
        let a = expert.action_from_obs(obs)?;
        for (acc, v) in action.iter_mut().zip(&a) {
            *acc += wi * v;
        }
    }
    for (v, lim) in action.iter_mut().zip(action_limits) {
        *v = v.clamp(lim[0], lim[1]);
    }
    Ok(action)
}

/// Task-level distillation loss: `KL(w_pred || w_v) - beta * H(w_pred)`.
pub fn task_loss(w_pred: &SimplexVector, w_v: &SimplexVector, beta_ent: f64) -> f64 {
    kl_categorical(w_pred, w_v) - beta_ent * entropy_categorical(w_pred)
}

/// Gradient of [`task_loss`] with respect to the logits that produced
/// `w_pred` by softmax.
pub fn task_loss_logit_grad(w_pred: &SimplexVector, w_v: &SimplexVector, beta_ent: f64) -> Vec<f64> {
    let kl_g = kl_softmax_grad(w_pred, w_v);
    let ne_g = neg_entropy_softmax_grad(w_pred);
    kl_g.iter()
        .zip(&ne_g)
        .map(|(k, n)| k + beta_ent * n)
        .collect()
}

/// Demonstration-level distillation loss at one state: the KL between the
/// router's weights and the phase-matched demonstration prior. Minibatch
/// averaging supplies the expectation over states.
pub fn demo_loss(w_pred: &SimplexVector, prior_at_phase: &SimplexVector) -> f64 {
    kl_categorical(w_pred, prior_at_phase)
}

/// Loss-combination settings for router distillation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct RouterLossCfg {
    /// Entropy bonus inside the task-level loss.
    pub beta_ent: f64,
    /// Initial guidance weight.
    pub lambda0: f64,
    /// Per-iteration decay of the guidance weight, in (0, 1).
    pub eta: f64,
    pub n_phase_bins: usize,
    /// Swap the KL argument order in both distillation losses.
    pub reverse_kl: bool,
}

impl Default for RouterLossCfg {
    fn default() -> Self {
        Self {
            beta_ent: 0.01,
            lambda0: 1.0,
            eta: 0.999,
            n_phase_bins: 8,
            reverse_kl: false,
        }
    }
}

impl RouterLossCfg {
    pub fn validate(&self) -> Result<()> {
        if self.beta_ent < 0.0 || self.lambda0 < 0.0 {
            return Err(Error::Invalid {
                what: "router loss config",
                detail: "beta_ent and lambda0 must be nonnegative".into(),
            });
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::Invalid {
                what: "router loss config",
                detail: "eta must lie in (0, 1)".into(),
            });
        }
        if self.n_phase_bins == 0 {
            return Err(Error::Invalid {
                what: "router loss config",
                detail: "need at least one phase bin".into(),
            });
        }
        Ok(())
    }
}

/// Guidance weight at iteration t: `lambda0 * eta^t`.
pub fn lambda_at(cfg: &RouterLossCfg, t: usize) -> f64 {
    cfg.lambda0 * cfg.eta.powi(t as i32)
}

/// Combined objective at iteration t: `lambda(t) * l_task + l_demo`.
pub fn unified_loss(l_task: f64, l_demo: f64, t: usize, cfg: &RouterLossCfg) -> f64 {
    lambda_at(cfg, t) * l_task + l_demo
}

/// Piecewise-constant simplex schedule over normalized task progress.
/// Entry i covers phases in `[until_{i-1}, until_i)`; the breakpoints are
/// strictly increasing and the last one is 1. Serializes as the bare entry
/// list, matching the oracle file layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseSchedule {
    pub entries: Vec<PhaseEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseEntry {
    pub until_phase: f64,
    pub weights: SimplexVector,
}

impl PhaseSchedule {
    pub fn validate(&self, n_experts: usize) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::Oracle("demo prior schedule is empty".into()));
        }
        let mut prev = 0.0;
        for e in &self.entries {
            if e.until_phase <= prev {
                return Err(Error::Oracle(format!(
                    "schedule breakpoints must be strictly increasing: {} after {}",
                    e.until_phase, prev
                )));
            }
            if e.weights.len() != n_experts {
                return Err(Error::Oracle(format!(
                    "schedule weights length {} does not match {} experts",
                    e.weights.len(),
                    n_experts
                )));
            }
            prev = e.until_phase;
        }
        if (prev - 1.0).abs() > 1e-9 {
            return Err(Error::Oracle(format!(
                "schedule must cover [0, 1]; last breakpoint is {prev}"
            )));
        }
        Ok(())
    }

    pub fn at_phase(&self, phase: f64) -> &SimplexVector {
        for e in &self.entries {
            if phase < e.until_phase {
                return &e.weights;
            }
        }
        &self.entries.last().expect("validated nonempty").weights
    }
}

/// File-backed stand-in for a semantic advisor: a task embedding, a global
/// expert-relevance prior, and a phase-indexed demonstration prior.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemanticOracle {
    pub format_version: u32,
    pub task: String,
    pub embedding: Vec<f64>,
    pub task_prior: SimplexVector,
    pub demo_prior: PhaseSchedule,
    /// Optional expert-order annotation for cross-checking configs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experts: Option<Vec<String>>,
}

impl SemanticOracle {
    pub fn n_experts(&self) -> usize {
        self.task_prior.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != ORACLE_FORMAT_VERSION {
            return Err(Error::Oracle(format!(
                "unsupported oracle format version {}",
                self.format_version
            )));
        }
        if self.embedding.is_empty() || self.embedding.iter().any(|v| !v.is_finite()) {
            return Err(Error::Oracle("embedding must be nonempty and finite".into()));
        }
        self.demo_prior.validate(self.n_experts())?;
        if let Some(names) = &self.experts {
            if names.len() != self.n_experts() {
                return Err(Error::Oracle(format!(
                    "expert name list ({}) does not match task prior length ({})",
                    names.len(),
                    self.n_experts()
                )));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }
}

/// Raw oracle document before simplex renormalization.
#[derive(Debug, Deserialize)]
struct OracleDoc {
    #[serde(default = "default_version")]
    format_version: u32,
    task: String,
    embedding: Vec<f64>,
    task_prior: Vec<f64>,
    demo_prior: Vec<OracleDocEntry>,
    #[serde(default)]
    experts: Option<Vec<String>>,
}

fn default_version() -> u32 {
    ORACLE_FORMAT_VERSION
}

#[derive(Debug, Deserialize)]
struct OracleDocEntry {
    until_phase: f64,
    weights: Vec<f64>,
}

/// Load and validate an oracle document. Simplex fields whose sums are off
/// by at most 1e-6 are renormalized silently; anything further off is
/// rejected.
pub fn load_oracle(path: &Path) -> Result<SemanticOracle> {
    let file = std::fs::File::open(path)
        .map_err(|_| Error::MissingPrerequisite(path.display().to_string()))?;
    let doc: OracleDoc = serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| Error::Oracle(format!("malformed oracle document: {e}")))?;
    let task_prior = SimplexVector::renormalized(doc.task_prior, ORACLE_SIMPLEX_TOL)
        .map_err(|e| Error::Oracle(format!("task prior: {e}")))?;
    let entries = doc
        .demo_prior
        .into_iter()
        .map(|e| {
            Ok(PhaseEntry {
                until_phase: e.until_phase,
                weights: SimplexVector::renormalized(e.weights, ORACLE_SIMPLEX_TOL)
                    .map_err(|err| Error::Oracle(format!("demo prior weights: {err}")))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let oracle = SemanticOracle {
        format_version: doc.format_version,
        task: doc.task,
        embedding: doc.embedding,
        task_prior,
        demo_prior: PhaseSchedule { entries },
        experts: doc.experts,
    };
    oracle.validate()?;
    Ok(oracle)
}

/// Labeled demonstrations: each step of each trace is annotated with the
/// expert (0-based) that acted and the task phase.
#[derive(Debug, Clone)]
pub struct DemoSet {
    pub episodes: Vec<DemoEpisode>,
}

#[derive(Debug, Clone)]
pub struct DemoEpisode {
    pub trace: EpisodeTrace,
    pub labels: Vec<usize>,
}

impl DemoSet {
    pub fn validate(&self, n_experts: usize) -> Result<()> {
        for ep in &self.episodes {
            if ep.trace.is_empty() {
                return Err(Error::EmptyInput("demo episode"));
            }
            if ep.labels.len() != ep.trace.len() {
                return Err(Error::ShapeMismatch {
                    what: "demo labels",
                    expected: ep.trace.len(),
                    got: ep.labels.len(),
                });
            }
            if ep.labels.iter().any(|&l| l >= n_experts) {
                return Err(Error::Invalid {
                    what: "demo labels",
                    detail: format!("label out of range for {n_experts} experts"),
                });
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    /// Total number of labeled steps.
    pub fn n_steps(&self) -> usize {
        self.episodes.iter().map(|e| e.labels.len()).sum()
    }
}

/// Empirical expert-usage schedule: per phase bin, the Laplace-smoothed
/// frequency of expert labels among demo steps falling in that bin. Bins
/// with no demo steps inherit the nearest populated bin.
pub fn demo_prior(demos: &DemoSet, n_experts: usize, n_phase_bins: usize) -> Result<PhaseSchedule> {
    if demos.is_empty() {
        return Err(Error::EmptyInput("demo set"));
    }
    demos.validate(n_experts)?;
    let bins = n_phase_bins.max(1);
    let mut counts = vec![vec![0usize; n_experts]; bins];
    for ep in &demos.episodes {
        for (i, &label) in ep.labels.iter().enumerate() {
            // The label belongs to the decision made at state i.
            let phase = ep.trace.states[i].phase;
            let b = ((phase * bins as f64).floor() as usize).min(bins - 1);
            counts[b][label] += 1;
        }
    }
    let occupied: Vec<usize> = (0..bins)
        .filter(|&b| counts[b].iter().sum::<usize>() > 0)
        .collect();
    debug_assert!(!occupied.is_empty());
    let mut entries = Vec::with_capacity(bins);
    for b in 0..bins {
        let source = if counts[b].iter().sum::<usize>() > 0 {
            b
        } else {
            *occupied
                .iter()
                .min_by_key(|&&o| (o as i64 - b as i64).unsigned_abs())
                .expect("some bin is occupied")
        };
        let total: usize = counts[source].iter().sum();
        let weights: Vec<f64> = counts[source]
            .iter()
            .map(|&c| (c + 1) as f64 / (total + n_experts) as f64)
            .collect();
        entries.push(PhaseEntry {
            until_phase: (b + 1) as f64 / bins as f64,
            weights: SimplexVector::renormalized(weights, 1e-9)?,
        });
    }
    // Pin the last breakpoint to exactly 1.
    entries.last_mut().expect("bins >= 1").until_phase = 1.0;
    let schedule = PhaseSchedule { entries };
    schedule.validate(n_experts)?;
    Ok(schedule)
}

/// Versioned router checkpoint: the network plus expert count and embedding
/// length.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RouterCheckpoint {
    pub format_version: u32,
    pub n_experts: usize,
    pub embedding_len: usize,
    pub net: NetCheckpoint,
}

impl RouterCheckpoint {
    pub fn from_router(r: &Router) -> Self {
        Self {
            format_version: ROUTER_FORMAT_VERSION,
            n_experts: r.n_experts,
            embedding_len: r.embedding_len,
            net: NetCheckpoint::from_net(&r.net),
        }
    }

    pub fn into_router(self) -> Result<Router> {
        if self.format_version != ROUTER_FORMAT_VERSION {
            return Err(Error::Invalid {
                what: "router checkpoint",
                detail: format!("unsupported format version {}", self.format_version),
            });
        }
        let net = self.net.into_net()?;
        if net.out_dim() != self.n_experts {
            return Err(Error::ShapeMismatch {
                what: "router checkpoint",
                expected: self.n_experts,
                got: net.out_dim(),
            });
        }
        Ok(Router {
            net,
            n_experts: self.n_experts,
            embedding_len: self.embedding_len,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|_| Error::MissingPrerequisite(path.display().to_string()))?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{point_mass_env, EnvState, Skill};
    use crate::expert::{train_expert, TrainConfig};
    use crate::planner::WorldModelConfig;

    fn tiny_expert(seed: u64) -> TrainedExpert {
        let spec = point_mass_env(Skill::Stand);
        let reference = spec.reference.clone().unwrap();
        let cfg = TrainConfig {
            steps: 0,
            world: WorldModelConfig {
                latent_dim: 6,
                encoder_hidden: vec![8],
                model_hidden: vec![8],
            },
            policy_hidden: vec![8],
            value_hidden: vec![8],
            ..TrainConfig::default()
        };
        train_expert(&spec, Some(&reference), Skill::Stand, &cfg, seed)
            .unwrap()
            .0
    }

    #[test]
    fn zero_parameter_router_is_uniform() {
        let router = Router {
            net: DenseNet::zeros(&[22, 3], Activation::Tanh).unwrap(),
            n_experts: 3,
            embedding_len: 16,
        };
        let w = router.route(&[0.5; 6], &[0.1; 16]).unwrap();
        for &p in w.as_slice() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn route_is_deterministic() {
        let mut rng = SeededRng::new(4);
        let router = Router::init(6, 16, 3, &[16], &mut rng).unwrap();
        let obs = [0.3, -0.2, 0.1, 0.0, 0.4, -0.4];
        let emb = [0.05; 16];
        assert_eq!(
            router.route(&obs, &emb).unwrap(),
            router.route(&obs, &emb).unwrap()
        );
    }

    #[test]
    fn biased_logits_concentrate_weight() {
        let mut net = DenseNet::zeros(&[22, 3], Activation::Tanh).unwrap();
        *net.bias_mut(0, 0) = 10.0;
        let router = Router {
            net,
            n_experts: 3,
            embedding_len: 16,
        };
        let w = router.route(&[0.0; 6], &[0.0; 16]).unwrap();
        assert!(w[0] > 0.9999);
        assert!(w[1] < 1e-4 && w[2] < 1e-4);
    }

    #[test]
    fn one_hot_composition_reproduces_selected_expert() {
        let experts = vec![tiny_expert(1), tiny_expert(2), tiny_expert(3)];
        let spec = point_mass_env(Skill::Stand);
        let obs = vec![0.2, -0.3, 0.1, 0.0, 0.1, -0.2];
        for j in 0..3 {
            let w = SimplexVector::one_hot(3, j);
            let composed = compose_action(&experts, &w, &obs, &spec.action_limits).unwrap();
            let direct: Vec<f64> = experts[j]
                .action_from_obs(&obs)
                .unwrap()
                .iter()
                .zip(&spec.action_limits)
                .map(|(v, lim)| v.clamp(lim[0], lim[1]))
                .collect();
            assert_eq!(composed, direct);
        }
    }

    #[test]
    fn symmetric_blend_cancels() {
        // Two synthetic experts with opposite constant outputs.
        let mut plus = tiny_expert(5);
        let mut minus = tiny_expert(5);
        plus.policy.policy_net = DenseNet::zeros(&[6, 4], Activation::Identity).unwrap();
        minus.policy.policy_net = DenseNet::zeros(&[6, 4], Activation::Identity).unwrap();
        *plus.policy.policy_net.bias_mut(0, 0) = 1.0;
        *minus.policy.policy_net.bias_mut(0, 0) = -1.0;
        plus.world.encoder = DenseNet::zeros(&[6, 6], Activation::Identity).unwrap();
        minus.world.encoder = DenseNet::zeros(&[6, 6], Activation::Identity).unwrap();
        let w = SimplexVector::new(vec![0.5, 0.5]).unwrap();
        let a = compose_action(
            &[plus, minus],
            &w,
            &[0.0; 6],
            &[[-2.0, 2.0], [-2.0, 2.0]],
        )
        .unwrap();
        assert_eq!(a, vec![0.0, 0.0]);
    }

    #[test]
    fn random_weight_composition_matches_dot_product_oracle() {
        let experts = vec![tiny_expert(7), tiny_expert(8), tiny_expert(9)];
        let spec = point_mass_env(Skill::Stand);
        let mut rng = SeededRng::new(77);
        for _ in 0..20 {
            let raw = rng.uniform_vec(3, 0.01, 1.0);
            let sum: f64 = raw.iter().sum();
            let w = SimplexVector::renormalized(raw.iter().map(|x| x / sum).collect(), 1e-6)
                .unwrap();
            let obs = rng.uniform_vec(6, -0.5, 0.5);
            let composed = compose_action(&experts, &w, &obs, &spec.action_limits).unwrap();
            // Independent weighted-sum evaluation.
            let mut want = vec![0.0; 2];
            for (j, e) in experts.iter().enumerate() {
                let a = e.action_from_obs(&obs).unwrap();
                for d in 0..2 {
                    want[d] += w[j] * a[d];
                }
            }
            for d in 0..2 {
                let clipped = want[d].clamp(-2.0, 2.0);
                assert!((composed[d] - clipped).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn task_loss_at_prior_is_negative_beta_entropy() {
        let w = SimplexVector::new(vec![0.6, 0.3, 0.1]).unwrap();
        let beta = 0.05;
        let l = task_loss(&w, &w, beta);
        assert!((l + beta * entropy_categorical(&w)).abs() < 1e-12);
    }

    #[test]
    fn task_loss_single_term_kl() {
        let w_pred = SimplexVector::one_hot(2, 0);
        let w_v = SimplexVector::uniform(2);
        let l = task_loss(&w_pred, &w_v, 0.0);
        assert!((l - 2.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn task_loss_gradient_matches_finite_differences() {
        let w_v = SimplexVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        let logits = vec![0.4, -0.3, 0.8];
        let beta = 0.07;
        let p = softmax(&logits);
        let grad = task_loss_logit_grad(&p, &w_v, beta);
        let h = 1e-7;
        for i in 0..3 {
            let mut lp = logits.clone();
            let mut lm = logits.clone();
            lp[i] += h;
            lm[i] -= h;
            let fp = task_loss(&softmax(&lp), &w_v, beta);
            let fm = task_loss(&softmax(&lm), &w_v, beta);
            let num = (fp - fm) / (2.0 * h);
            let rel = (num - grad[i]).abs() / num.abs().max(grad[i].abs()).max(1e-8);
            assert!(rel < 1e-4, "logit {i}: rel {rel}");
        }
    }

    #[test]
    fn task_loss_minimum_sits_at_prior() {
        // Gradient descent on logits from random starts lands on w_v when
        // beta_ent = 0.
        let w_v = SimplexVector::new(vec![0.6, 0.3, 0.1]).unwrap();
        let mut rng = SeededRng::new(123);
        for _ in 0..20 {
            let mut logits = rng.uniform_vec(3, -2.0, 2.0);
            for _ in 0..4000 {
                let p = softmax(&logits);
                let g = task_loss_logit_grad(&p, &w_v, 0.0);
                for (l, gi) in logits.iter_mut().zip(&g) {
                    *l -= 0.5 * gi;
                }
            }
            let p = softmax(&logits);
            for (got, want) in p.as_slice().iter().zip(w_v.as_slice()) {
                assert!((got - want).abs() < 1e-3, "{:?}", p.as_slice());
            }
        }
    }

    #[test]
    fn demo_loss_matches_kl_examples() {
        let p = SimplexVector::new(vec![0.5, 0.5]).unwrap();
        let q = SimplexVector::new(vec![0.25, 0.75]).unwrap();
        assert!((demo_loss(&p, &q) - 0.14384).abs() < 1e-5);
        assert_eq!(demo_loss(&q, &q), 0.0);
        let mut rng = SeededRng::new(9);
        for _ in 0..1000 {
            let raw_a = rng.uniform_vec(3, 0.01, 1.0);
            let raw_b = rng.uniform_vec(3, 0.01, 1.0);
            let sa: f64 = raw_a.iter().sum();
            let sb: f64 = raw_b.iter().sum();
            let a = SimplexVector::renormalized(raw_a.iter().map(|x| x / sa).collect(), 1e-6)
                .unwrap();
            let b = SimplexVector::renormalized(raw_b.iter().map(|x| x / sb).collect(), 1e-6)
                .unwrap();
            assert!(demo_loss(&a, &b) >= 0.0);
        }
    }

    #[test]
    fn unified_loss_examples() {
        let cfg = RouterLossCfg {
            lambda0: 1.0,
            eta: 0.5,
            ..RouterLossCfg::default()
        };
        // t = 0: lambda0 * l_task + l_demo.
        assert!((unified_loss(2.0, 1.0, 0, &cfg) - 3.0).abs() < 1e-15);
        // lambda0 = 1, eta = 0.5, t = 3: 0.125 * 8 + 1 = 2.
        assert!((unified_loss(8.0, 1.0, 3, &cfg) - 2.0).abs() < 1e-15);
        let off = RouterLossCfg {
            lambda0: 0.0,
            ..RouterLossCfg::default()
        };
        assert_eq!(unified_loss(123.0, 0.7, 10, &off), 0.7);
    }

    #[test]
    fn lambda_schedule_decreases() {
        let cfg = RouterLossCfg {
            lambda0: 2.0,
            eta: 0.9,
            ..RouterLossCfg::default()
        };
        assert_eq!(lambda_at(&cfg, 0), 2.0);
        let mut prev = f64::INFINITY;
        for t in 0..20 {
            let l = lambda_at(&cfg, t);
            assert!(l < prev);
            prev = l;
        }
    }

    fn demo_from_labels(phase_denom: usize, labels: Vec<usize>) -> DemoEpisode {
        // Synthetic trace with evenly spaced phases.
        let n = labels.len();
        let mut states = Vec::with_capacity(n + 1);
        for i in 0..=n {
            states.push(EnvState {
                q: vec![0.0, 0.0],
                qdot: vec![0.0, 0.0],
                t: i,
                phase: i as f64 / phase_denom as f64,
            });
        }
        DemoEpisode {
            trace: EpisodeTrace {
                states,
                actions: vec![vec![0.0, 0.0]; n],
                rewards: vec![0.0; n],
                fallen: vec![false; n],
            },
            labels,
        }
    }

    #[test]
    fn demo_prior_single_expert_smoothed_counts() {
        // One demo labeled expert 0 throughout, K = 2, one bin:
        // [(T+1)/(T+2), 1/(T+2)].
        let t_steps = 10;
        let demos = DemoSet {
            episodes: vec![demo_from_labels(t_steps + 1, vec![0; t_steps])],
        };
        let schedule = demo_prior(&demos, 2, 1).unwrap();
        let w = &schedule.entries[0].weights;
        assert!((w[0] - (t_steps + 1) as f64 / (t_steps + 2) as f64).abs() < 1e-12);
        assert!((w[1] - 1.0 / (t_steps + 2) as f64).abs() < 1e-12);
    }

    #[test]
    fn demo_prior_even_split_is_uniform() {
        let demos = DemoSet {
            episodes: vec![demo_from_labels(8, vec![0, 1, 0, 1, 0, 1, 0, 1])],
        };
        let schedule = demo_prior(&demos, 2, 1).unwrap();
        let w = &schedule.entries[0].weights;
        assert!((w[0] - 0.5).abs() < 1e-12);
        assert!((w[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn demo_prior_detects_switch_across_bins() {
        // Eight steps, expert 0 for the first half, expert 1 after: with four
        // bins the first two favor expert 0, the last two expert 1.
        let demos = DemoSet {
            episodes: vec![demo_from_labels(8, vec![0, 0, 0, 0, 1, 1, 1, 1])],
        };
        let schedule = demo_prior(&demos, 2, 4).unwrap();
        for b in 0..2 {
            assert!(schedule.entries[b].weights[0] > 0.5, "bin {b}");
        }
        for b in 2..4 {
            assert!(schedule.entries[b].weights[1] > 0.5, "bin {b}");
        }
    }

    #[test]
    fn demo_prior_empty_bins_inherit_nearest() {
        // Steps only in the first quarter; remaining bins copy it.
        let demos = DemoSet {
            episodes: vec![demo_from_labels(16, vec![0, 0])],
        };
        let schedule = demo_prior(&demos, 2, 4).unwrap();
        for b in 1..4 {
            assert_eq!(schedule.entries[b].weights, schedule.entries[0].weights);
        }
    }

    fn sample_oracle() -> SemanticOracle {
        SemanticOracle {
            format_version: ORACLE_FORMAT_VERSION,
            task: "composite-door".into(),
            embedding: vec![0.1; 16],
            task_prior: SimplexVector::new(vec![0.25, 0.4, 0.35]).unwrap(),
            demo_prior: PhaseSchedule {
                entries: vec![
                    PhaseEntry {
                        until_phase: 0.085,
                        weights: SimplexVector::new(vec![0.8, 0.15, 0.05]).unwrap(),
                    },
                    PhaseEntry {
                        until_phase: 0.37,
                        weights: SimplexVector::new(vec![0.1, 0.8, 0.1]).unwrap(),
                    },
                    PhaseEntry {
                        until_phase: 1.0,
                        weights: SimplexVector::new(vec![0.05, 0.15, 0.8]).unwrap(),
                    },
                ],
            },
            experts: Some(vec!["stand".into(), "walk".into(), "reach".into()]),
        }
    }

    #[test]
    fn oracle_roundtrip_and_validation() {
        let oracle = sample_oracle();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("oracle.json");
        oracle.save(&path).unwrap();
        let back = load_oracle(&path).unwrap();
        assert_eq!(back.task, "composite-door");
        assert_eq!(back.n_experts(), 3);
        assert_eq!(back.demo_prior, oracle.demo_prior);
    }

    #[test]
    fn oracle_near_simplex_is_renormalized() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("oracle.json");
        let text = r#"{
            "task": "composite-door",
            "embedding": [0.1, 0.2],
            "task_prior": [0.5, 0.5000001],
            "demo_prior": [{"until_phase": 1.0, "weights": [0.3, 0.7]}]
        }"#;
        std::fs::write(&path, text).unwrap();
        let oracle = load_oracle(&path).unwrap();
        let sum: f64 = oracle.task_prior.as_slice().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_far_from_simplex_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("oracle.json");
        let text = r#"{
            "task": "composite-door",
            "embedding": [0.1],
            "task_prior": [0.5, 0.6],
            "demo_prior": [{"until_phase": 1.0, "weights": [0.3, 0.7]}]
        }"#;
        std::fs::write(&path, text).unwrap();
        assert!(matches!(load_oracle(&path), Err(Error::Oracle(_))));
    }

    #[test]
    fn oracle_without_unit_coverage_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("oracle.json");
        let text = r#"{
            "task": "composite-door",
            "embedding": [0.1],
            "task_prior": [0.5, 0.5],
            "demo_prior": [{"until_phase": 0.6, "weights": [0.3, 0.7]}]
        }"#;
        std::fs::write(&path, text).unwrap();
        let err = load_oracle(&path).unwrap_err();
        match err {
            Error::Oracle(msg) => assert!(msg.contains("cover"), "{msg}"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn oracle_with_decreasing_breakpoints_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("oracle.json");
        let text = r#"{
            "task": "composite-door",
            "embedding": [0.1],
            "task_prior": [0.5, 0.5],
            "demo_prior": [
                {"until_phase": 0.8, "weights": [0.3, 0.7]},
                {"until_phase": 0.5, "weights": [0.5, 0.5]}
            ]
        }"#;
        std::fs::write(&path, text).unwrap();
        assert!(matches!(load_oracle(&path), Err(Error::Oracle(_))));
    }

    #[test]
    fn phase_schedule_lookup() {
        let oracle = sample_oracle();
        assert_eq!(oracle.demo_prior.at_phase(0.0).argmax(), 0);
        assert_eq!(oracle.demo_prior.at_phase(0.2).argmax(), 1);
        assert_eq!(oracle.demo_prior.at_phase(0.9).argmax(), 2);
    }

    #[test]
    fn router_checkpoint_roundtrip() {
        let mut rng = SeededRng::new(15);
        let router = Router::init(6, 16, 3, &[16], &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("router.json");
        RouterCheckpoint::from_router(&router).save(&path).unwrap();
        let back = RouterCheckpoint::load(&path).unwrap().into_router().unwrap();
        let obs = [0.2; 6];
        let emb = [0.1; 16];
        assert_eq!(
            router.route(&obs, &emb).unwrap(),
            back.route(&obs, &emb).unwrap()
        );
    }
}
