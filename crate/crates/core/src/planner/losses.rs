//! World-model training losses with exact gradients.
//!
//! Three heads share the encoder: latent dynamics regresses onto the frozen
//! encoding of the next observation, the reward head onto observed rewards,
//! and the value ensemble onto one-step bootstrapped targets. Targets are
//! detached: perturbing the online parameters never moves them.

use crate::error::{Error, Result};
use crate::expert::{td_target, ExpertPolicy, ImitationBatch};
use crate::numkit::{DenseNet, NetGrads};
use crate::planner::{concat, WorldModel};

/// Per-head loss weights; a zero weight leaves that head's parameters
/// untouched.
#[derive(Debug, Clone, Copy)]
pub struct HeadWeights {
    pub dynamics: f64,
    pub reward: f64,
    pub value: f64,
}

impl Default for HeadWeights {
    fn default() -> Self {
        Self {
            dynamics: 1.0,
            reward: 1.0,
            value: 1.0,
        }
    }
}

#[derive(Debug)]
pub struct ModelLossReport {
    pub dynamics_loss: f64,
    pub reward_loss: f64,
    pub value_loss: f64,
    pub total: f64,
    pub encoder_grads: NetGrads,
    pub dynamics_grads: NetGrads,
    pub reward_grads: NetGrads,
    pub value_grads: Vec<NetGrads>,
}

impl ModelLossReport {
    pub fn all_finite(&self) -> bool {
        self.dynamics_loss.is_finite() && self.reward_loss.is_finite() && self.value_loss.is_finite()
    }
}

/// Losses and gradients with explicit, pre-computed regression targets.
///
/// `latent_targets[i]` is the detached target for `dynamics(enc(obs_i), a_i)`
/// and `value_targets[i]` the detached TD target. Batch-mean scaling; the
/// squared dynamics error sums over latent dimensions.
pub fn model_losses_with_targets(
    world: &WorldModel,
    values: &[DenseNet],
    batch: &ImitationBatch,
    latent_targets: &[Vec<f64>],
    value_targets: &[f64],
    weights: &HeadWeights,
) -> Result<ModelLossReport> {
    batch.validate()?;
    let b = batch.len();
    if latent_targets.len() != b || value_targets.len() != b {
        return Err(Error::ShapeMismatch {
            what: "model-loss targets",
            expected: b,
            got: latent_targets.len().min(value_targets.len()),
        });
    }
    let scale = 1.0 / b as f64;
    let latent_dim = world.latent_dim();

    let mut dynamics_loss = 0.0;
    let mut reward_loss = 0.0;
    let mut value_loss = 0.0;
    let mut encoder_grads = NetGrads::zeros_like(&world.encoder);
    let mut dynamics_grads = NetGrads::zeros_like(&world.dynamics);
    let mut reward_grads = NetGrads::zeros_like(&world.reward_head);
    let mut value_grads: Vec<NetGrads> = values.iter().map(NetGrads::zeros_like).collect();

    for (i, tr) in batch.transitions.iter().enumerate() {
        let enc_trace = world.encoder.forward_trace(&tr.obs)?;
        let z = enc_trace.output().to_vec();
        let input = concat(&z, &tr.action);

        // dl/dz accumulated across every head that reads the encoding.
        let mut dl_dz = vec![0.0; latent_dim];

        let dyn_trace = world.dynamics.forward_trace(&input)?;
        let z_pred = dyn_trace.output();
        let mut dl_dzpred = vec![0.0; latent_dim];
        let mut dyn_err = 0.0;
        for j in 0..latent_dim {
            let d = z_pred[j] - latent_targets[i][j];
            dyn_err += d * d;
            dl_dzpred[j] = 2.0 * d * weights.dynamics * scale;
        }
        dynamics_loss += dyn_err * scale;
        if weights.dynamics != 0.0 {
            let g = world.dynamics.backward(&dyn_trace, &dl_dzpred)?;
            for j in 0..latent_dim {
                dl_dz[j] += g.d_input[j];
            }
            dynamics_grads.add_scaled(&g, 1.0);
        }

        let rew_trace = world.reward_head.forward_trace(&input)?;
        let r_pred = rew_trace.output()[0];
        let r_err = r_pred - tr.reward;
        reward_loss += r_err * r_err * scale;
        if weights.reward != 0.0 {
            let g = world
                .reward_head
                .backward(&rew_trace, &[2.0 * r_err * weights.reward * scale])?;
            for j in 0..latent_dim {
                dl_dz[j] += g.d_input[j];
            }
            reward_grads.add_scaled(&g, 1.0);
        }

        for (k, q_net) in values.iter().enumerate() {
            let q_trace = q_net.forward_trace(&input)?;
            let q = q_trace.output()[0];
            let q_err = q - value_targets[i];
            value_loss += q_err * q_err * scale;
            if weights.value != 0.0 {
                let g = q_net.backward(&q_trace, &[2.0 * q_err * weights.value * scale])?;
                for j in 0..latent_dim {
                    dl_dz[j] += g.d_input[j];
                }
                value_grads[k].add_scaled(&g, 1.0);
            }
        }

        let g_enc = world.encoder.backward(&enc_trace, &dl_dz)?;
        encoder_grads.add_scaled(&g_enc, 1.0);
    }

    let total = weights.dynamics * dynamics_loss
        + weights.reward * reward_loss
        + weights.value * value_loss;
    Ok(ModelLossReport {
        dynamics_loss,
        reward_loss,
        value_loss,
        total,
        encoder_grads,
        dynamics_grads,
        reward_grads,
        value_grads,
    })
}

/// Compute detached targets from the current model and the expert's target
/// ensemble, then delegate to [`model_losses_with_targets`]. The dynamics
/// target is the encoding of the next observation; the value target is the
/// one-step bootstrapped alignment value.
pub fn model_losses(
    world: &WorldModel,
    expert: &ExpertPolicy,
    batch: &ImitationBatch,
    weights: &HeadWeights,
) -> Result<ModelLossReport> {
    batch.validate()?;
    let mut latent_targets = Vec::with_capacity(batch.len());
    let mut value_targets = Vec::with_capacity(batch.len());
    for tr in &batch.transitions {
        latent_targets.push(world.encode(&tr.next_obs)?);
        let z_next = latent_targets.last().expect("just pushed");
        value_targets.push(td_target(
            tr.reward,
            z_next,
            expert,
            &expert.target_ensemble,
            if tr.done { 0.0 } else { expert.gamma },
        )?);
    }
    model_losses_with_targets(
        world,
        &expert.value_ensemble,
        batch,
        &latent_targets,
        &value_targets,
        weights,
    )
}
