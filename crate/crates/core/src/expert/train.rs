//! Expert training loop: environment rollouts into a replay buffer,
//! interleaved world-model, critic, and policy updates, per-episode joint
//! reweighting, and periodic deterministic evaluation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::refs::{RefTrajectory, Skill};
use crate::env::{observe, reset, step, EnvSpec};
use crate::error::{Error, Result};
use crate::expert::{
    imitation_reward, policy_loss_and_grads, td_target, update_joint_weights, EntropySign,
    ExpertPolicy, ImitationBatch, JointWeights, RewardHyper, Transition,
};
use crate::numkit::{entropy_from_log_std, Activation, Adam, DenseNet, NetCheckpoint, SeededRng};
use crate::planner::{
    concat, model_losses, HeadWeights, PlanConfig, PlannerModel, RecedingPlanner, WorldModel,
    WorldModelConfig,
};

pub const EXPERT_FORMAT_VERSION: u32 = 1;

/// Which reward signal fills the replay buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardSource {
    /// Energy-shaped tracking reward against the reference motion.
    Imitation,
    /// The environment's own task reward.
    Task,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Environment steps of training; zero returns the initialized policy.
    pub steps: usize,
    /// Steps of uniform-random warmup before updates begin.
    pub warmup_steps: usize,
    /// Hold each warmup action this many steps so exploration reaches the
    /// velocity envelope instead of diffusing around rest.
    pub warmup_action_hold: usize,
    pub batch_size: usize,
    pub updates_per_step: usize,
    pub eval_interval: usize,
    pub eval_episodes: usize,
    pub replay_capacity: usize,
    pub lr_policy: f64,
    /// Epsilon of the actor's optimizer. Kept large so near-flat value
    /// surfaces produce near-zero policy motion instead of normalized noise.
    pub policy_adam_eps: f64,
    pub lr_value: f64,
    /// Learning rate of the dynamics and reward heads.
    pub lr_model: f64,
    /// Learning rate of the observation encoder. The desk default freezes
    /// it: a random projection is a stable feature map at this scale, and
    /// training it shifts the latent space under the policy and critic.
    pub lr_encoder: f64,
    /// Critic-only updates before the actor starts moving.
    pub actor_delay_updates: usize,
    pub polyak_rate: f64,
    pub ensemble_size: usize,
    pub world: WorldModelConfig,
    pub policy_hidden: Vec<usize>,
    pub value_hidden: Vec<usize>,
    pub gamma: f64,
    pub tau_entropy: f64,
    pub beta_temp: f64,
    pub ema_decay: f64,
    pub reward_hyper: RewardHyper,
    pub entropy_sign: EntropySign,
    pub reward_source: RewardSource,
    /// Act with the receding-horizon planner instead of policy samples.
    pub use_planner: bool,
    pub use_cem: bool,
    pub plan_horizon: usize,
    pub plan_samples: usize,
    pub plan_elites: usize,
    pub plan_iters: usize,
    pub plan_temperature: f64,
    pub mu_value: f64,
    pub plan_init_std: f64,
    /// Shorter episodes for desk-scale budgets; `None` keeps the spec value.
    pub episode_len: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 3000,
            warmup_steps: 200,
            warmup_action_hold: 15,
            batch_size: 32,
            updates_per_step: 1,
            eval_interval: 1000,
            eval_episodes: 4,
            replay_capacity: 20_000,
            lr_policy: 3e-4,
            policy_adam_eps: 1e-3,
            lr_value: 1e-3,
            lr_model: 1e-3,
            lr_encoder: 0.0,
            actor_delay_updates: 500,
            polyak_rate: 0.005,
            ensemble_size: 2,
            world: WorldModelConfig::default(),
            policy_hidden: vec![32, 32],
            value_hidden: vec![32, 32],
            gamma: 0.99,
            tau_entropy: 0.01,
            beta_temp: 0.01,
            ema_decay: 0.95,
            reward_hyper: RewardHyper::default(),
            entropy_sign: EntropySign::Bonus,
            reward_source: RewardSource::Imitation,
            use_planner: false,
            use_cem: false,
            plan_horizon: 10,
            plan_samples: 256,
            plan_elites: 16,
            plan_iters: 4,
            plan_temperature: 0.5,
            mu_value: 0.5,
            plan_init_std: 0.5,
            episode_len: None,
        }
    }
}

impl TrainConfig {
    fn plan_config(&self, action_limits: Vec<[f64; 2]>) -> PlanConfig {
        let dim = action_limits.len();
        let mut cfg = PlanConfig::new(action_limits);
        cfg.horizon = self.plan_horizon;
        cfg.n_samples = self.plan_samples;
        cfg.n_elites = self.plan_elites.min(self.plan_samples);
        cfg.n_iters = self.plan_iters;
        cfg.temperature = self.plan_temperature;
        cfg.mu_value = self.mu_value;
        cfg.gamma = self.gamma;
        cfg.init_std = vec![self.plan_init_std; dim];
        cfg
    }
}

/// Fixed-capacity ring buffer of transitions with uniform resampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    data: Vec<Transition>,
    capacity: usize,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            data: Vec::with_capacity(capacity.min(4096)),
            capacity,
            cursor: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.cursor] = t;
            self.cursor = (self.cursor + 1) % self.capacity;
        }
    }

    pub fn sample(&self, batch_size: usize, rng: &mut SeededRng) -> ImitationBatch {
        debug_assert!(!self.data.is_empty());
        let transitions = (0..batch_size)
            .map(|_| self.data[rng.usize_below(self.data.len())].clone())
            .collect();
        ImitationBatch { transitions }
    }
}

/// One point of an evaluation curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub mean_return: f64,
    pub stderr: f64,
}

/// A frozen expert: policy plus the world model that feeds it latents.
#[derive(Debug, Clone)]
pub struct TrainedExpert {
    pub policy: ExpertPolicy,
    pub world: WorldModel,
}

impl TrainedExpert {
    /// Deterministic mean action from a raw observation.
    pub fn action_from_obs(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let z = self.world.encode(obs)?;
        self.policy.mean_action(&z)
    }

    pub fn entropy_at_obs(&self, obs: &[f64]) -> Result<f64> {
        let z = self.world.encode(obs)?;
        let (_, log_std) = self.policy.policy_params(&z)?;
        Ok(entropy_from_log_std(&log_std))
    }
}

fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

struct Optimizers {
    encoder: Adam,
    dynamics: Adam,
    reward: Adam,
    policy: Adam,
    values: Vec<Adam>,
}

#[derive(Debug, Clone, Copy)]
pub struct PolicyUpdateReport {
    pub policy_objective: f64,
    pub value_loss: f64,
}

/// Regress the value ensemble onto bootstrapped targets. Returns the batch
/// latents (for a following actor step) and the mean squared value loss.
pub fn critic_update(
    batch: &ImitationBatch,
    expert: &mut ExpertPolicy,
    world: &WorldModel,
    opt_values: &mut [Adam],
) -> Result<(Vec<Vec<f64>>, f64)> {
    batch.validate()?;
    let b = batch.len() as f64;

    let mut latents = Vec::with_capacity(batch.len());
    let mut targets = Vec::with_capacity(batch.len());
    for tr in &batch.transitions {
        latents.push(world.encode(&tr.obs)?);
        let z_next = world.encode(&tr.next_obs)?;
        let gamma = if tr.done { 0.0 } else { expert.gamma };
        targets.push(td_target(
            tr.reward,
            &z_next,
            expert,
            &expert.target_ensemble,
            gamma,
        )?);
    }

    let mut value_loss = 0.0;
    let ensemble_size = expert.value_ensemble.len() as f64;
    for (k, q_net) in expert.value_ensemble.iter_mut().enumerate() {
        let mut grads = crate::numkit::NetGrads::zeros_like(q_net);
        for (i, tr) in batch.transitions.iter().enumerate() {
            let input = concat(&latents[i], &tr.action);
            let trace = q_net.forward_trace(&input)?;
            let err = trace.output()[0] - targets[i];
            value_loss += err * err / (b * ensemble_size);
            let g = q_net.backward(&trace, &[2.0 * err / b])?;
            grads.add_scaled(&g, 1.0);
        }
        opt_values[k].step(q_net, &grads);
    }
    Ok((latents, value_loss))
}

fn polyak_targets(expert: &mut ExpertPolicy, rate: f64) {
    for (target, online) in expert
        .target_ensemble
        .iter_mut()
        .zip(&expert.value_ensemble)
    {
        target.polyak_from(online, rate);
    }
}

/// Critic regression to bootstrapped targets, reparameterized policy ascent,
/// and Polyak target refresh, in that order.
pub fn policy_update(
    batch: &ImitationBatch,
    expert: &mut ExpertPolicy,
    world: &WorldModel,
    action_limits: &[[f64; 2]],
    opt_policy: &mut Adam,
    opt_values: &mut [Adam],
    polyak_rate: f64,
    rng: &mut SeededRng,
) -> Result<PolicyUpdateReport> {
    let (latents, value_loss) = critic_update(batch, expert, world, opt_values)?;

    let noises: Vec<Vec<f64>> = (0..batch.len())
        .map(|_| rng.normal_vec(expert.action_dim()))
        .collect();
    let (objective, mut grads) = policy_loss_and_grads(
        &expert.policy_net,
        &expert.value_ensemble,
        &latents,
        &noises,
        action_limits,
        expert.tau_entropy,
        expert.entropy_sign,
    )?;
    // The optimizer descends; flip to ascend the objective.
    grads.scale(-1.0);
    opt_policy.step(&mut expert.policy_net, &grads);

    polyak_targets(expert, polyak_rate);

    if !objective.is_finite() || !value_loss.is_finite() {
        return Err(Error::TrainingAbort(format!(
            "non-finite policy update: objective {objective}, value loss {value_loss}"
        )));
    }
    Ok(PolicyUpdateReport {
        policy_objective: objective,
        value_loss,
    })
}

fn active_reward(
    source: RewardSource,
    spec: &EnvSpec,
    next: &crate::env::EnvState,
    task_reward: f64,
    reference: Option<&RefTrajectory>,
    jw: &JointWeights,
    hyper: &RewardHyper,
) -> Result<f64> {
    match source {
        RewardSource::Task => Ok(task_reward),
        RewardSource::Imitation => {
            let reference = reference.ok_or(Error::Invalid {
                what: "train config",
                detail: "imitation reward requires a reference trajectory".into(),
            })?;
            let frame = reference.frame_at_phase(spec.phase_of(next.t));
            imitation_reward(next, frame, jw, hyper)
        }
    }
}

/// Deterministic evaluation: fixed derived seeds, mean-action rollouts,
/// returns summed in the active reward.
fn evaluate(
    spec: &EnvSpec,
    reference: Option<&RefTrajectory>,
    expert: &TrainedExpert,
    cfg: &TrainConfig,
    root: &SeededRng,
    at_step: usize,
) -> Result<CurvePoint> {
    let mut returns = Vec::with_capacity(cfg.eval_episodes);
    for ep in 0..cfg.eval_episodes {
        let mut rng = root.derive(0x00E0_0000 + ep as u64);
        let mut s = reset(spec, &mut rng);
        let mut total = 0.0;
        loop {
            let obs = observe(spec, &s);
            let action = expert.action_from_obs(&obs)?;
            let r = step(spec, &s, &action)?;
            total += active_reward(
                cfg.reward_source,
                spec,
                &r.next,
                r.task_reward,
                reference,
                &expert.policy.joint_weights,
                &cfg.reward_hyper,
            )?;
            s = r.next;
            if r.done {
                break;
            }
        }
        returns.push(total);
    }
    let (mean_return, stderr) = mean_and_stderr(&returns);
    Ok(CurvePoint {
        step: at_step,
        mean_return,
        stderr,
    })
}

/// Train one expert on its environment. Deterministic given the seed: the
/// learning curve and final parameters depend only on (spec, reference,
/// config, seed). A zero-step budget returns the freshly initialized policy
/// and a single evaluation point.
pub fn train_expert(
    spec: &EnvSpec,
    reference: Option<&RefTrajectory>,
    skill: Skill,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(TrainedExpert, Vec<CurvePoint>)> {
    let mut spec = spec.clone();
    if let Some(len) = cfg.episode_len {
        spec.episode_len = len;
    }
    spec.validate()?;
    cfg.reward_hyper.validate()?;
    if cfg.reward_source == RewardSource::Imitation && reference.is_none() {
        return Err(Error::Invalid {
            what: "train config",
            detail: "imitation training requires a reference trajectory".into(),
        });
    }

    let obs_dim = crate::env::OBS_DIM;
    let adim = spec.action_dim;
    let root = SeededRng::new(seed);
    let mut init_rng = root.derive(1);

    let world = WorldModel::init(obs_dim, adim, &cfg.world, &mut init_rng)?;
    let latent = cfg.world.latent_dim;
    let mut policy_sizes = vec![latent];
    policy_sizes.extend(&cfg.policy_hidden);
    policy_sizes.push(2 * adim);
    let mut policy_net = DenseNet::init(&policy_sizes, Activation::Tanh, &mut init_rng)?;
    // Start exploration narrow: bias the log-std head so the initial std is
    // about exp(-1) of the action scale instead of 1.
    let out_layer = policy_net.n_layers() - 1;
    for d in 0..adim {
        *policy_net.bias_mut(out_layer, adim + d) = -1.0;
    }
    let mut value_sizes = vec![latent + adim];
    value_sizes.extend(&cfg.value_hidden);
    value_sizes.push(1);
    let value_ensemble: Vec<DenseNet> = (0..cfg.ensemble_size.max(1))
        .map(|_| DenseNet::init(&value_sizes, Activation::Tanh, &mut init_rng))
        .collect::<Result<_>>()?;
    let target_ensemble = value_ensemble.clone();

    let expert_policy = ExpertPolicy {
        skill,
        policy_net,
        value_ensemble,
        target_ensemble,
        reward_hyper: cfg.reward_hyper,
        joint_weights: JointWeights::uniform(spec.dof, cfg.ema_decay),
        gamma: cfg.gamma,
        tau_entropy: cfg.tau_entropy,
        beta_temp: cfg.beta_temp,
        entropy_sign: cfg.entropy_sign,
    };
    expert_policy.validate()?;
    let mut bundle = TrainedExpert {
        policy: expert_policy,
        world,
    };

    let mut opts = Optimizers {
        encoder: Adam::new(bundle.world.encoder.param_count(), cfg.lr_encoder),
        dynamics: Adam::new(bundle.world.dynamics.param_count(), cfg.lr_model),
        reward: Adam::new(bundle.world.reward_head.param_count(), cfg.lr_model),
        policy: Adam::with_eps(
            bundle.policy.policy_net.param_count(),
            cfg.lr_policy,
            cfg.policy_adam_eps,
        ),
        values: bundle
            .policy
            .value_ensemble
            .iter()
            .map(|v| Adam::new(v.param_count(), cfg.lr_value))
            .collect(),
    };

    let mut curve = Vec::new();
    curve.push(evaluate(&spec, reference, &bundle, cfg, &root, 0)?);
    if cfg.steps == 0 {
        return Ok((bundle, curve));
    }

    let mut rollout_rng = root.derive(2);
    let mut batch_rng = root.derive(3);
    let mut replay = ReplayBuffer::new(cfg.replay_capacity);
    let mut planner = cfg
        .use_planner
        .then(|| RecedingPlanner::new(cfg.plan_config(spec.action_limits.clone()), cfg.use_cem));

    let mut s = reset(&spec, &mut rollout_rng);
    let mut ep_sq_err = vec![0.0; spec.dof];
    let mut ep_steps = 0usize;
    let mut updates_done = 0usize;
    let mut held_action: Vec<f64> = Vec::new();

    for global_step in 1..=cfg.steps {
        let obs = observe(&spec, &s);
        let action = if global_step <= cfg.warmup_steps {
            let hold = cfg.warmup_action_hold.max(1);
            if (global_step - 1) % hold == 0 || held_action.is_empty() {
                held_action = spec
                    .action_limits
                    .iter()
                    .map(|lim| rollout_rng.uniform(lim[0], lim[1]))
                    .collect::<Vec<f64>>();
            }
            held_action.clone()
        } else if let Some(planner) = planner.as_mut() {
            let z = bundle.world.encode(&obs)?;
            let model = PlannerModel {
                world: &bundle.world,
                values: &bundle.policy.value_ensemble,
            };
            planner.act(&model, Some(&bundle.policy.policy_net), &z, &mut rollout_rng)?
        } else {
            let z = bundle.world.encode(&obs)?;
            let (mean, log_std) = bundle.policy.policy_params(&z)?;
            mean.iter()
                .zip(&log_std)
                .map(|(m, ls)| m + ls.exp() * rollout_rng.normal())
                .collect()
        };
        let action = spec.clip_action(&action);
        let r = step(&spec, &s, &action)?;
        let reward = active_reward(
            cfg.reward_source,
            &spec,
            &r.next,
            r.task_reward,
            reference,
            &bundle.policy.joint_weights,
            &cfg.reward_hyper,
        )?;
        // Bootstrap through episode time limits; only a fall is a true
        // terminal state. Otherwise identical observations carry targets
        // that differ by the unobservable time-to-go.
        replay.push(Transition {
            obs,
            action,
            reward,
            next_obs: observe(&spec, &r.next),
            done: r.fallen,
        });

        if let Some(reference) = reference {
            let frame = reference.frame_at_phase(spec.phase_of(r.next.t));
            for j in 0..spec.dof {
                let d = r.next.q[j] - frame.q[j];
                ep_sq_err[j] += d * d;
            }
            ep_steps += 1;
        }

        if r.done {
            if reference.is_some() && ep_steps > 0 {
                let mean_err: Vec<f64> =
                    ep_sq_err.iter().map(|e| e / ep_steps as f64).collect();
                bundle.policy.joint_weights =
                    update_joint_weights(&bundle.policy.joint_weights, &mean_err)?;
                ep_sq_err.iter_mut().for_each(|e| *e = 0.0);
                ep_steps = 0;
            }
            s = reset(&spec, &mut rollout_rng);
            if let Some(p) = planner.as_mut() {
                p.reset();
            }
        } else {
            s = r.next;
        }

        if global_step > cfg.warmup_steps && replay.len() >= cfg.batch_size {
            for _ in 0..cfg.updates_per_step {
                let batch = replay.sample(cfg.batch_size, &mut batch_rng);
                let weights = HeadWeights {
                    dynamics: 1.0,
                    reward: 1.0,
                    // The critic pass below owns the value regression.
                    value: 0.0,
                };
                let report = model_losses(&bundle.world, &bundle.policy, &batch, &weights)?;
                if !report.all_finite() {
                    return Err(Error::TrainingAbort(format!(
                        "non-finite model loss at step {global_step}"
                    )));
                }
                if cfg.lr_encoder > 0.0 {
                    opts.encoder.step(&mut bundle.world.encoder, &report.encoder_grads);
                }
                opts.dynamics
                    .step(&mut bundle.world.dynamics, &report.dynamics_grads);
                opts.reward
                    .step(&mut bundle.world.reward_head, &report.reward_grads);

                if updates_done < cfg.actor_delay_updates {
                    critic_update(&batch, &mut bundle.policy, &bundle.world, &mut opts.values)?;
                    polyak_targets(&mut bundle.policy, cfg.polyak_rate);
                } else {
                    policy_update(
                        &batch,
                        &mut bundle.policy,
                        &bundle.world,
                        &spec.action_limits,
                        &mut opts.policy,
                        &mut opts.values,
                        cfg.polyak_rate,
                        &mut batch_rng,
                    )?;
                }
                updates_done += 1;
            }
        }

        if global_step % cfg.eval_interval == 0 || global_step == cfg.steps {
            curve.push(evaluate(&spec, reference, &bundle, cfg, &root, global_step)?);
        }
    }

    Ok((bundle, curve))
}

/// Mean policy entropy over deterministic evaluation rollouts.
pub fn mean_policy_entropy(
    spec: &EnvSpec,
    expert: &TrainedExpert,
    episodes: usize,
    seed: u64,
) -> Result<f64> {
    let root = SeededRng::new(seed);
    let mut total = 0.0;
    let mut count = 0usize;
    for ep in 0..episodes {
        let mut rng = root.derive(ep as u64);
        let mut s = reset(spec, &mut rng);
        loop {
            let obs = observe(spec, &s);
            total += expert.entropy_at_obs(&obs)?;
            count += 1;
            let action = expert.action_from_obs(&obs)?;
            let r = step(spec, &s, &action)?;
            s = r.next;
            if r.done {
                break;
            }
        }
    }
    Ok(total / count as f64)
}

/// On-disk form of a trained expert: skill tag, hyperparameters, and every
/// network head.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpertCheckpoint {
    pub format_version: u32,
    pub skill: Skill,
    pub gamma: f64,
    pub tau_entropy: f64,
    pub beta_temp: f64,
    pub entropy_sign: EntropySign,
    pub reward_hyper: RewardHyper,
    pub joint_weights: JointWeights,
    pub policy: NetCheckpoint,
    pub value_ensemble: Vec<NetCheckpoint>,
    pub target_ensemble: Vec<NetCheckpoint>,
    pub encoder: NetCheckpoint,
    pub dynamics: NetCheckpoint,
    pub reward_head: NetCheckpoint,
}

impl ExpertCheckpoint {
    pub fn from_expert(e: &TrainedExpert) -> Self {
        Self {
            format_version: EXPERT_FORMAT_VERSION,
            skill: e.policy.skill,
            gamma: e.policy.gamma,
            tau_entropy: e.policy.tau_entropy,
            beta_temp: e.policy.beta_temp,
            entropy_sign: e.policy.entropy_sign,
            reward_hyper: e.policy.reward_hyper,
            joint_weights: e.policy.joint_weights.clone(),
            policy: NetCheckpoint::from_net(&e.policy.policy_net),
            value_ensemble: e
                .policy
                .value_ensemble
                .iter()
                .map(NetCheckpoint::from_net)
                .collect(),
            target_ensemble: e
                .policy
                .target_ensemble
                .iter()
                .map(NetCheckpoint::from_net)
                .collect(),
            encoder: NetCheckpoint::from_net(&e.world.encoder),
            dynamics: NetCheckpoint::from_net(&e.world.dynamics),
            reward_head: NetCheckpoint::from_net(&e.world.reward_head),
        }
    }

    pub fn into_expert(self) -> Result<TrainedExpert> {
        if self.format_version != EXPERT_FORMAT_VERSION {
            return Err(Error::Invalid {
                what: "expert checkpoint",
                detail: format!("unsupported format version {}", self.format_version),
            });
        }
        let policy = ExpertPolicy {
            skill: self.skill,
            policy_net: self.policy.into_net()?,
            value_ensemble: self
                .value_ensemble
                .into_iter()
                .map(|c| c.into_net())
                .collect::<Result<_>>()?,
            target_ensemble: self
                .target_ensemble
                .into_iter()
                .map(|c| c.into_net())
                .collect::<Result<_>>()?,
            reward_hyper: self.reward_hyper,
            joint_weights: self.joint_weights,
            gamma: self.gamma,
            tau_entropy: self.tau_entropy,
            beta_temp: self.beta_temp,
            entropy_sign: self.entropy_sign,
        };
        policy.validate()?;
        Ok(TrainedExpert {
            policy,
            world: WorldModel {
                encoder: self.encoder.into_net()?,
                dynamics: self.dynamics.into_net()?,
                reward_head: self.reward_head.into_net()?,
            },
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
