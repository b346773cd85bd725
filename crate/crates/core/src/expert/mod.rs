//! Specialized per-skill policies trained by imitation-shaped reinforcement:
//! an energy-shaped tracking reward with per-joint reweighting, an ensemble
//! of alignment value heads trained on TD targets, and a max-entropy policy
//! update through reparameterized samples.

pub mod train;

use serde::{Deserialize, Serialize};

use crate::env::refs::{RefFrame, Skill};
use crate::env::EnvState;
use crate::error::{Error, Result};
use crate::numkit::{entropy_from_log_std, DenseNet, ForwardTrace, NetGrads};
use crate::planner::concat;

pub use train::{
    train_expert, CurvePoint, ExpertCheckpoint, ReplayBuffer, RewardSource, TrainConfig,
    TrainedExpert, EXPERT_FORMAT_VERSION,
};

/// Bounds applied to the policy head's log-std outputs.
pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Scalar shaping parameters of the energy-based tracking reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardHyper {
    /// Outer scale on the whole reward.
    pub w_scale: f64,
    /// Sharpness of the position alignment term.
    pub alpha_pos: f64,
    /// Sharpness of the velocity alignment term.
    pub beta_vel: f64,
    /// Relative weight of the velocity term.
    pub lambda_vel: f64,
}

impl Default for RewardHyper {
    fn default() -> Self {
        Self {
            w_scale: 1.0,
            alpha_pos: 2.0,
            beta_vel: 0.1,
            lambda_vel: 0.5,
        }
    }
}

impl RewardHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.w_scale > 0.0) || !(self.alpha_pos > 0.0) || !(self.beta_vel > 0.0) {
            return Err(Error::Invalid {
                what: "reward hyperparameters",
                detail: "w_scale, alpha_pos, beta_vel must be positive".into(),
            });
        }
        if self.lambda_vel < 0.0 {
            return Err(Error::Invalid {
                what: "reward hyperparameters",
                detail: "lambda_vel must be nonnegative".into(),
            });
        }
        Ok(())
    }

    /// Upper bound of the reward, reached exactly at perfect tracking.
    pub fn max_reward(&self) -> f64 {
        self.w_scale * (1.0 + self.lambda_vel)
    }
}

/// Per-joint weights inside the tracking norms, raised for joints whose
/// recent tracking error runs high. Weights stay in `[u_min, u_max]` and sum
/// to the number of joints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointWeights {
    pub u: Vec<f64>,
    pub ema_err: Vec<f64>,
    pub ema_decay: f64,
    pub u_min: f64,
    pub u_max: f64,
}

impl JointWeights {
    pub fn uniform(dof: usize, ema_decay: f64) -> Self {
        Self {
            u: vec![1.0; dof],
            ema_err: vec![0.0; dof],
            ema_decay,
            u_min: 0.2,
            u_max: 5.0,
        }
    }

    pub fn dof(&self) -> usize {
        self.u.len()
    }
}

/// Project raw weights onto the intersection of the box `[u_min, u_max]` and
/// the plane `sum u = dof`: clamp, then redistribute the deficit over the
/// coordinates that still have slack.
fn project_weights(raw: &[f64], u_min: f64, u_max: f64) -> Vec<f64> {
    let dof = raw.len() as f64;
    let mut u: Vec<f64> = raw.iter().map(|&v| v.clamp(u_min, u_max)).collect();
    for _ in 0..raw.len() + 1 {
        let sum: f64 = u.iter().sum();
        let deficit = dof - sum;
        if deficit.abs() < 1e-12 {
            break;
        }
        let movable: Vec<usize> = (0..u.len())
            .filter(|&j| {
                if deficit > 0.0 {
                    u[j] < u_max - 1e-15
                } else {
                    u[j] > u_min + 1e-15
                }
            })
            .collect();
        if movable.is_empty() {
            break;
        }
        let share = deficit / movable.len() as f64;
        for &j in &movable {
            u[j] = (u[j] + share).clamp(u_min, u_max);
        }
    }
    u
}

/// Fold fresh squared tracking errors into the moving average and recompute
/// the weights as the clamped, renormalized ratio of each joint's average to
/// the mean. All-zero averages fall back to uniform weights.
pub fn update_joint_weights(jw: &JointWeights, sq_err: &[f64]) -> Result<JointWeights> {
    if sq_err.len() != jw.dof() {
        return Err(Error::ShapeMismatch {
            what: "joint-weight errors",
            expected: jw.dof(),
            got: sq_err.len(),
        });
    }
    if sq_err.iter().any(|&e| e < 0.0 || !e.is_finite()) {
        return Err(Error::Invalid {
            what: "joint-weight errors",
            detail: "squared errors must be finite and nonnegative".into(),
        });
    }
    let mut next = jw.clone();
    for (ema, &e) in next.ema_err.iter_mut().zip(sq_err) {
        *ema = jw.ema_decay * *ema + (1.0 - jw.ema_decay) * e;
    }
    let mean: f64 = next.ema_err.iter().sum::<f64>() / next.dof() as f64;
    if mean <= 1e-300 {
        next.u = vec![1.0; next.dof()];
        return Ok(next);
    }
    let raw: Vec<f64> = next.ema_err.iter().map(|&e| e / mean).collect();
    next.u = project_weights(&raw, next.u_min, next.u_max);
    Ok(next)
}

/// Which way the entropy term enters the policy objective. `Bonus` adds it
/// (max-entropy form); `Penalty` subtracts it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropySign {
    Bonus,
    Penalty,
}

impl EntropySign {
    pub fn factor(self) -> f64 {
        match self {
            EntropySign::Bonus => 1.0,
            EntropySign::Penalty => -1.0,
        }
    }
}

/// One skill expert: stochastic policy head over latents, an ensemble of
/// alignment value heads with delayed target copies, and the reward shaping
/// state.
#[derive(Debug, Clone)]
pub struct ExpertPolicy {
    pub skill: Skill,
    /// Latent -> [action mean, action log-std].
    pub policy_net: DenseNet,
    /// Each maps (latent ++ action) -> scalar alignment value.
    pub value_ensemble: Vec<DenseNet>,
    /// Delayed copies of the value ensemble used for TD targets.
    pub target_ensemble: Vec<DenseNet>,
    pub reward_hyper: RewardHyper,
    pub joint_weights: JointWeights,
    pub gamma: f64,
    pub tau_entropy: f64,
    pub beta_temp: f64,
    pub entropy_sign: EntropySign,
}

impl ExpertPolicy {
    pub fn action_dim(&self) -> usize {
        self.policy_net.out_dim() / 2
    }

    pub fn latent_dim(&self) -> usize {
        self.policy_net.in_dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.value_ensemble.is_empty() {
            return Err(Error::Invalid {
                what: "expert policy",
                detail: "value ensemble must be nonempty".into(),
            });
        }
        if self.target_ensemble.len() != self.value_ensemble.len() {
            return Err(Error::ShapeMismatch {
                what: "target ensemble",
                expected: self.value_ensemble.len(),
                got: self.target_ensemble.len(),
            });
        }
        for (v, t) in self.value_ensemble.iter().zip(&self.target_ensemble) {
            if v.layer_sizes() != t.layer_sizes() {
                return Err(Error::Invalid {
                    what: "target ensemble",
                    detail: "target shapes must match the online ensemble".into(),
                });
            }
        }
        self.reward_hyper.validate()
    }

    /// Deterministic action: the policy mean at the latent.
    pub fn mean_action(&self, z: &[f64]) -> Result<Vec<f64>> {
        let out = self.policy_net.forward(z)?;
        Ok(out[..self.action_dim()].to_vec())
    }

    /// Mean and clamped log-std at the latent.
    pub fn policy_params(&self, z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let out = self.policy_net.forward(z)?;
        let adim = self.action_dim();
        let mean = out[..adim].to_vec();
        let log_std: Vec<f64> = out[adim..]
            .iter()
            .map(|ls| ls.clamp(LOG_STD_MIN, LOG_STD_MAX))
            .collect();
        Ok((mean, log_std))
    }
}

/// Energy-shaped tracking reward at a phase-aligned reference frame:
///
/// `w * [exp(-alpha * sum_j u_j dq_j^2) + lambda * exp(-beta * sum_j u_j dv_j^2)]`
///
/// Bounded in `(0, w * (1 + lambda)]`, strictly decreasing in every per-joint
/// squared error, equal to the bound exactly at perfect tracking.
pub fn imitation_reward(
    s: &EnvState,
    ref_frame: &RefFrame,
    jw: &JointWeights,
    h: &RewardHyper,
) -> Result<f64> {
    let dof = jw.dof();
    if s.q.len() != dof || ref_frame.q.len() != dof {
        return Err(Error::ShapeMismatch {
            what: "imitation reward states",
            expected: dof,
            got: s.q.len().min(ref_frame.q.len()),
        });
    }
    let mut pos = 0.0;
    let mut vel = 0.0;
    for j in 0..dof {
        let dq = s.q[j] - ref_frame.q[j];
        let dv = s.qdot[j] - ref_frame.qdot[j];
        pos += jw.u[j] * dq * dq;
        vel += jw.u[j] * dv * dv;
    }
    Ok(h.w_scale * ((-h.alpha_pos * pos).exp() + h.lambda_vel * (-h.beta_vel * vel).exp()))
}

/// One-step bootstrapped target: `r + gamma * min_i Q_target_i(z', a*)` where
/// `a*` is the policy mean at the next latent. With `gamma = 0` the target is
/// exactly the reward.
pub fn td_target(
    r: f64,
    z_next: &[f64],
    policy: &ExpertPolicy,
    target_ensemble: &[DenseNet],
    gamma: f64,
) -> Result<f64> {
    if gamma == 0.0 {
        return Ok(r);
    }
    let a_star = policy.mean_action(z_next)?;
    let input = concat(z_next, &a_star);
    let mut min_q = f64::INFINITY;
    for q_net in target_ensemble {
        let q = q_net.forward(&input)?[0];
        min_q = min_q.min(q);
    }
    Ok(r + gamma * min_q)
}

/// Loss value and policy-parameter gradients of the reparameterized policy
/// objective `mean_i [min_j Q_j(z_i, clip(mean + std * eps_i)) + sign * tau * H]`.
/// The sampled action is clamped into the limits so the ascent only probes
/// the region the critic is trained on; clamped dimensions get no action
/// gradient. The value ensemble is held fixed.
pub fn policy_loss_and_grads(
    policy_net: &DenseNet,
    value_ensemble: &[DenseNet],
    latents: &[Vec<f64>],
    noises: &[Vec<f64>],
    action_limits: &[[f64; 2]],
    tau_entropy: f64,
    sign: EntropySign,
) -> Result<(f64, NetGrads)> {
    if latents.is_empty() {
        return Err(Error::EmptyInput("policy batch"));
    }
    if value_ensemble.is_empty() {
        return Err(Error::EmptyInput("value ensemble"));
    }
    let adim = policy_net.out_dim() / 2;
    if action_limits.len() != adim {
        return Err(Error::ShapeMismatch {
            what: "policy action limits",
            expected: adim,
            got: action_limits.len(),
        });
    }
    let scale = 1.0 / latents.len() as f64;
    let mut grads = NetGrads::zeros_like(policy_net);
    let mut objective = 0.0;

    for (z, eps) in latents.iter().zip(noises) {
        let trace: ForwardTrace = policy_net.forward_trace(z)?;
        let out = trace.output();
        let mean = &out[..adim];
        let log_std_raw = &out[adim..];
        let log_std: Vec<f64> = log_std_raw
            .iter()
            .map(|ls| ls.clamp(LOG_STD_MIN, LOG_STD_MAX))
            .collect();
        let std: Vec<f64> = log_std.iter().map(|ls| ls.exp()).collect();
        let mut clamped = vec![false; adim];
        let action: Vec<f64> = mean
            .iter()
            .zip(&std)
            .zip(eps)
            .enumerate()
            .map(|(d, ((m, s), e))| {
                let raw = m + s * e;
                let lim = action_limits[d];
                let val = raw.clamp(lim[0], lim[1]);
                clamped[d] = val != raw;
                val
            })
            .collect();

        // Min over the ensemble; gradient follows the active head.
        let input = concat(z, &action);
        let mut best = f64::INFINITY;
        let mut best_idx = 0;
        let mut traces = Vec::with_capacity(value_ensemble.len());
        for (i, q_net) in value_ensemble.iter().enumerate() {
            let q_trace = q_net.forward_trace(&input)?;
            let q = q_trace.output()[0];
            if q < best {
                best = q;
                best_idx = i;
            }
            traces.push(q_trace);
        }
        let q_grads = value_ensemble[best_idx].backward(&traces[best_idx], &[1.0])?;
        let dq_da = &q_grads.d_input[z.len()..];

        let entropy = entropy_from_log_std(&log_std);
        objective += best + sign.factor() * tau_entropy * entropy;

        let mut dl_dy = vec![0.0; policy_net.out_dim()];
        for d in 0..adim {
            let through_clamp = if clamped[d] { 0.0 } else { dq_da[d] };
            dl_dy[d] = through_clamp;
            let in_range = log_std_raw[d] > LOG_STD_MIN && log_std_raw[d] < LOG_STD_MAX;
            if in_range {
                dl_dy[adim + d] =
                    through_clamp * eps[d] * std[d] + sign.factor() * tau_entropy;
            }
        }
        let g = policy_net.backward(&trace, &dl_dy)?;
        grads.add_scaled(&g, scale);
    }

    Ok((objective * scale, grads))
}

/// Discounted diagnostic return of a scored episode:
/// `sum_t gamma^t (R_t + beta * H_t)`. Empty traces score zero.
pub fn sep_objective_estimate(rewards: &[f64], entropies: &[f64], gamma: f64, beta_temp: f64) -> f64 {
    let mut acc = 0.0;
    let mut disc = 1.0;
    for (r, h) in rewards.iter().zip(entropies) {
        acc += disc * (r + beta_temp * h);
        disc *= gamma;
    }
    acc
}

/// One imitation transition; latents are produced by the encoder on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
}

/// A minibatch of imitation transitions with consistent dimensions.
#[derive(Debug, Clone)]
pub struct ImitationBatch {
    pub transitions: Vec<Transition>,
}

impl ImitationBatch {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.transitions.is_empty() {
            return Err(Error::EmptyInput("imitation batch"));
        }
        let obs_dim = self.transitions[0].obs.len();
        let adim = self.transitions[0].action.len();
        for t in &self.transitions {
            if t.obs.len() != obs_dim || t.next_obs.len() != obs_dim {
                return Err(Error::ShapeMismatch {
                    what: "batch observation",
                    expected: obs_dim,
                    got: t.obs.len().min(t.next_obs.len()),
                });
            }
            if t.action.len() != adim {
                return Err(Error::ShapeMismatch {
                    what: "batch action",
                    expected: adim,
                    got: t.action.len(),
                });
            }
            if !t.reward.is_finite()
                || t.obs.iter().any(|v| !v.is_finite())
                || t.next_obs.iter().any(|v| !v.is_finite())
                || t.action.iter().any(|v| !v.is_finite())
            {
                return Err(Error::NonFinite("imitation batch"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{Activation, SeededRng};
    use proptest::prelude::*;

    fn frame(q: Vec<f64>, qdot: Vec<f64>) -> RefFrame {
        RefFrame { q, qdot }
    }

    fn state(q: Vec<f64>, qdot: Vec<f64>) -> EnvState {
        EnvState {
            q,
            qdot,
            t: 0,
            phase: 0.0,
        }
    }

    #[test]
    fn perfect_tracking_hits_the_bound() {
        let jw = JointWeights::uniform(2, 0.95);
        let h = RewardHyper {
            w_scale: 1.0,
            lambda_vel: 0.5,
            ..RewardHyper::default()
        };
        let s = state(vec![0.3, -0.1], vec![0.2, 0.0]);
        let f = frame(vec![0.3, -0.1], vec![0.2, 0.0]);
        let r = imitation_reward(&s, &f, &jw, &h).unwrap();
        assert_eq!(r, 1.5);
        assert_eq!(r, h.max_reward());
    }

    #[test]
    fn huge_position_error_leaves_velocity_term() {
        let jw = JointWeights::uniform(2, 0.95);
        let h = RewardHyper::default();
        let s = state(vec![1e6, 0.0], vec![0.0, 0.0]);
        let f = frame(vec![0.0, 0.0], vec![0.0, 0.0]);
        let r = imitation_reward(&s, &f, &jw, &h).unwrap();
        assert!((r - h.w_scale * h.lambda_vel).abs() < 1e-12);
    }

    #[test]
    fn hand_evaluated_reward() {
        // u = [1, 1], dq = [1, 0], dv = 0, alpha = 1, w = 1, lambda = 0.5:
        // exp(-1) + 0.5 = 0.86788.
        let jw = JointWeights::uniform(2, 0.95);
        let h = RewardHyper {
            w_scale: 1.0,
            alpha_pos: 1.0,
            beta_vel: 0.1,
            lambda_vel: 0.5,
        };
        let s = state(vec![1.0, 0.0], vec![0.0, 0.0]);
        let f = frame(vec![0.0, 0.0], vec![0.0, 0.0]);
        let r = imitation_reward(&s, &f, &jw, &h).unwrap();
        assert!((r - ((-1.0f64).exp() + 0.5)).abs() < 1e-12);
        assert!((r - 0.86788).abs() < 1e-5);
    }

    #[test]
    fn equal_errors_give_uniform_weights() {
        let jw = JointWeights::uniform(3, 0.95);
        let next = update_joint_weights(&jw, &[0.4, 0.4, 0.4]).unwrap();
        for &u in &next.u {
            assert!((u - 1.0).abs() < 1e-12);
        }
        assert!((next.u.iter().sum::<f64>() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn two_to_one_errors_renormalize() {
        // dof = 2, ema ratio 2:1 -> u = [4/3, 2/3].
        let mut jw = JointWeights::uniform(2, 0.95);
        jw.ema_decay = 0.0;
        let next = update_joint_weights(&jw, &[2.0, 1.0]).unwrap();
        assert!((next.u[0] - 4.0 / 3.0).abs() < 1e-12, "{:?}", next.u);
        assert!((next.u[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn extreme_error_pins_at_u_max() {
        let mut jw = JointWeights::uniform(8, 0.95);
        jw.ema_decay = 0.0;
        let mut errs = vec![1e-9; 8];
        errs[3] = 1e3;
        let next = update_joint_weights(&jw, &errs).unwrap();
        assert!((next.u[3] - jw.u_max).abs() < 1e-9, "{:?}", next.u);
        let sum: f64 = next.u.iter().sum();
        assert!((sum - 8.0).abs() < 1e-9);
        for &u in &next.u {
            assert!(u >= jw.u_min - 1e-12 && u <= jw.u_max + 1e-12);
        }
    }

    #[test]
    fn all_zero_errors_fall_back_to_uniform() {
        let mut jw = JointWeights::uniform(2, 0.95);
        jw.u = vec![1.5, 0.5];
        let next = update_joint_weights(&jw, &[0.0, 0.0]).unwrap();
        assert_eq!(next.u, vec![1.0, 1.0]);
    }

    fn toy_expert(seed: u64, latent: usize, adim: usize) -> ExpertPolicy {
        let mut rng = SeededRng::new(seed);
        let policy_net = DenseNet::init(&[latent, 8, 2 * adim], Activation::Tanh, &mut rng).unwrap();
        let values: Vec<DenseNet> = (0..2)
            .map(|_| DenseNet::init(&[latent + adim, 8, 1], Activation::Tanh, &mut rng).unwrap())
            .collect();
        let targets = values.clone();
        ExpertPolicy {
            skill: Skill::Stand,
            policy_net,
            value_ensemble: values,
            target_ensemble: targets,
            reward_hyper: RewardHyper::default(),
            joint_weights: JointWeights::uniform(2, 0.95),
            gamma: 0.99,
            tau_entropy: 0.01,
            beta_temp: 0.01,
            entropy_sign: EntropySign::Bonus,
        }
    }

    #[test]
    fn td_target_gamma_zero_is_reward() {
        let e = toy_expert(1, 4, 2);
        let y = td_target(0.7, &[0.1, 0.2, 0.0, -0.1], &e, &e.target_ensemble, 0.0).unwrap();
        assert_eq!(y, 0.7);
    }

    #[test]
    fn td_target_constant_heads() {
        let mut e = toy_expert(2, 4, 2);
        let mut c1 = DenseNet::zeros(&[6, 1], Activation::Identity).unwrap();
        *c1.bias_mut(0, 0) = 3.0;
        let mut c2 = c1.clone();
        *c2.bias_mut(0, 0) = 3.0;
        e.target_ensemble = vec![c1, c2];
        let y = td_target(1.0, &[0.0; 4], &e, &e.target_ensemble, 0.5).unwrap();
        assert!((y - (1.0 + 0.5 * 3.0)).abs() < 1e-12);
    }

    #[test]
    fn td_target_takes_ensemble_min() {
        let mut e = toy_expert(3, 4, 2);
        let mut lo = DenseNet::zeros(&[6, 1], Activation::Identity).unwrap();
        *lo.bias_mut(0, 0) = 2.0;
        let mut hi = DenseNet::zeros(&[6, 1], Activation::Identity).unwrap();
        *hi.bias_mut(0, 0) = 5.0;
        e.target_ensemble = vec![hi, lo];
        let y = td_target(0.0, &[0.0; 4], &e, &e.target_ensemble, 1.0).unwrap();
        assert!((y - 2.0).abs() < 1e-12);
    }

    #[test]
    fn policy_gradient_matches_finite_differences() {
        let e = toy_expert(5, 3, 2);
        let mut rng = SeededRng::new(100);
        let latents: Vec<Vec<f64>> = (0..4).map(|_| rng.uniform_vec(3, -1.0, 1.0)).collect();
        let noises: Vec<Vec<f64>> = (0..4).map(|_| rng.normal_vec(2)).collect();
        let limits = [[-5.0, 5.0], [-5.0, 5.0]];
        let (loss, grads) = policy_loss_and_grads(
            &e.policy_net,
            &e.value_ensemble,
            &latents,
            &noises,
            &limits,
            0.05,
            EntropySign::Bonus,
        )
        .unwrap();
        assert!(loss.is_finite());

        let h = 1e-6;
        let mut max_rel: f64 = 0.0;
        let n_layers = e.policy_net.n_layers();
        for l in 0..n_layers {
            let rows = e.policy_net.layer_sizes()[l + 1];
            let cols = e.policy_net.layer_sizes()[l];
            for r in 0..rows {
                for c in 0..cols {
                    let mut plus = e.policy_net.clone();
                    *plus.weight_mut(l, r, c) += h;
                    let mut minus = e.policy_net.clone();
                    *minus.weight_mut(l, r, c) -= h;
                    let (lp, _) = policy_loss_and_grads(
                        &plus,
                        &e.value_ensemble,
                        &latents,
                        &noises,
                        &limits,
                        0.05,
                        EntropySign::Bonus,
                    )
                    .unwrap();
                    let (lm, _) = policy_loss_and_grads(
                        &minus,
                        &e.value_ensemble,
                        &latents,
                        &noises,
                        &limits,
                        0.05,
                        EntropySign::Bonus,
                    )
                    .unwrap();
                    let num = (lp - lm) / (2.0 * h);
                    let ana = grads.d_weights[l][r * cols + c];
                    let rel = (num - ana).abs() / num.abs().max(ana.abs()).max(1e-6);
                    max_rel = max_rel.max(rel);
                }
            }
        }
        assert!(max_rel < 1e-3, "max rel {max_rel}");
    }

    #[test]
    fn entropy_term_off_leaves_pure_value_ascent() {
        let e = toy_expert(6, 3, 2);
        let mut rng = SeededRng::new(200);
        let latents = vec![rng.uniform_vec(3, -1.0, 1.0)];
        let noises = vec![vec![0.0, 0.0]];
        let limits = [[-5.0, 5.0], [-5.0, 5.0]];
        let (j0, g0) = policy_loss_and_grads(
            &e.policy_net,
            &e.value_ensemble,
            &latents,
            &noises,
            &limits,
            0.0,
            EntropySign::Bonus,
        )
        .unwrap();
        let (j1, g1) = policy_loss_and_grads(
            &e.policy_net,
            &e.value_ensemble,
            &latents,
            &noises,
            &limits,
            0.0,
            EntropySign::Penalty,
        )
        .unwrap();
        // With tau = 0 the sign switch changes nothing.
        assert_eq!(j0, j1);
        assert_eq!(g0.d_weights, g1.d_weights);
    }

    #[test]
    fn objective_estimate_examples() {
        // Single step: R0 + beta * H0 regardless of gamma.
        let v = sep_objective_estimate(&[2.0], &[0.3], 0.42, 0.5);
        assert!((v - (2.0 + 0.5 * 0.3)).abs() < 1e-15);
        // Geometric partial sum with beta = 0.
        let rewards = vec![1.0; 20];
        let entropies = vec![0.0; 20];
        let got = sep_objective_estimate(&rewards, &entropies, 0.5, 0.0);
        let want = (1.0 - 0.5f64.powi(20)) / (1.0 - 0.5);
        assert!((got - want).abs() < 1e-12);
        // Empty trace.
        assert_eq!(sep_objective_estimate(&[], &[], 0.9, 0.1), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]
        #[test]
        fn reward_bounded_and_positive(
            dq in prop::collection::vec(-3.0..3.0f64, 2),
            dv in prop::collection::vec(-3.0..3.0f64, 2),
        ) {
            let jw = JointWeights::uniform(2, 0.95);
            let h = RewardHyper::default();
            let s = state(dq.clone(), dv.clone());
            let f = frame(vec![0.0, 0.0], vec![0.0, 0.0]);
            let r = imitation_reward(&s, &f, &jw, &h).unwrap();
            prop_assert!(r > 0.0);
            prop_assert!(r <= h.max_reward());
        }

        #[test]
        fn weights_invariants_hold_after_update_sequences(
            errs in prop::collection::vec(prop::collection::vec(0.0..10.0f64, 4), 1..6),
        ) {
            let mut jw = JointWeights::uniform(4, 0.9);
            for e in &errs {
                jw = update_joint_weights(&jw, e).unwrap();
                let sum: f64 = jw.u.iter().sum();
                prop_assert!((sum - 4.0).abs() < 1e-9);
                for &u in &jw.u {
                    prop_assert!(u >= jw.u_min - 1e-9 && u <= jw.u_max + 1e-9);
                }
            }
        }
    }
}
