//! Simulation-based feasibility gate for candidate reference motions.
//!
//! Each trajectory is executed in its target environment by a PD tracker.
//! Motions that command poses outside the joint limits, make the rollout
//! fall, or cannot be tracked below the error threshold are rejected with a
//! per-trajectory reason code. Nothing here is an error: infeasibility is a
//! reported outcome.

use serde::{Deserialize, Serialize};

use crate::env::refs::RefTrajectory;
use crate::env::{step, EnvSpec, EnvState};
use crate::error::Result;

/// Default mean-tracking-error threshold. Measured on the roster with the
/// default tracker: every feasible reference stays below 0.035, while a run
/// reference at double frequency lands near 0.16.
pub const DEFAULT_TRACKING_THRESHOLD: f64 = 0.08;

/// Proportional-derivative tracking policy used to probe dynamic feasibility.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PdTracker {
    pub kp: f64,
    pub kd: f64,
}

impl Default for PdTracker {
    fn default() -> Self {
        Self { kp: 25.0, kd: 10.0 }
    }
}

impl PdTracker {
    pub fn act(&self, q: &[f64], qdot: &[f64], q_ref: &[f64], qdot_ref: &[f64]) -> Vec<f64> {
        q.iter()
            .zip(qdot)
            .zip(q_ref.iter().zip(qdot_ref))
            .map(|((x, v), (xr, vr))| self.kp * (xr - x) + self.kd * (vr - v))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "snake_case")]
pub enum RejectReason {
    /// A frame commands a pose outside the environment's joint limits.
    LimitViolation { frame: usize, dof: usize },
    /// The tracking rollout fell.
    Fell { step: usize },
    /// Mean position tracking error exceeded the threshold.
    TrackingError { mean_error: f64, threshold: f64 },
    /// Trajectory frame spacing does not match the environment step size.
    TimingMismatch { traj_dt: f64, env_dt: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub index: usize,
    pub skill: String,
    pub kept: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<RejectReason>,
    pub mean_tracking_error: Option<f64>,
}

/// Structured rejection report, one entry per input trajectory in order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RejectionReport {
    pub outcomes: Vec<FilterOutcome>,
}

impl RejectionReport {
    pub fn kept_count(&self) -> usize {
        self.outcomes.iter().filter(|o| o.kept).count()
    }
}

fn precheck_limits(traj: &RefTrajectory, spec: &EnvSpec) -> Option<RejectReason> {
    for (k, f) in traj.frames.iter().enumerate() {
        for j in 0..traj.dof.min(spec.joint_limits.len()) {
            let lims = spec.joint_limits[j];
            if f.q[j] < lims[0] || f.q[j] > lims[1] {
                return Some(RejectReason::LimitViolation { frame: k, dof: j });
            }
        }
    }
    None
}

/// Track one full period from the trajectory's initial pose; return the mean
/// position error, or the step at which the rollout fell.
fn track_once(
    traj: &RefTrajectory,
    spec: &EnvSpec,
    tracker: &PdTracker,
) -> Result<std::result::Result<f64, usize>> {
    let n = traj.n_frames();
    let mut state = EnvState {
        q: traj.frames[0].q.clone(),
        qdot: traj.frames[0].qdot.clone(),
        t: 0,
        phase: 0.0,
    };
    let mut err_sum = 0.0;
    for k in 0..n {
        let frame = &traj.frames[k.min(n - 1)];
        let action = tracker.act(&state.q, &state.qdot, &frame.q, &frame.qdot);
        let r = step(spec, &state, &action)?;
        if r.fallen {
            return Ok(Err(k));
        }
        state = r.next;
        let target = &traj.frames[(k + 1).min(n - 1)];
        let mut err = 0.0;
        for j in 0..traj.dof {
            let d = state.q[j] - target.q[j];
            err += d * d;
        }
        err_sum += err.sqrt();
    }
    Ok(Ok(err_sum / n as f64))
}

/// Execute every candidate with the PD tracker and keep the ones that stay
/// upright and track within `error_threshold`. Kept trajectories preserve
/// input order.
pub fn feasibility_filter(
    trajs: &[RefTrajectory],
    spec: &EnvSpec,
    tracker: &PdTracker,
    error_threshold: f64,
) -> Result<(Vec<RefTrajectory>, RejectionReport)> {
    let mut kept = Vec::new();
    let mut outcomes = Vec::with_capacity(trajs.len());
    for (index, traj) in trajs.iter().enumerate() {
        let skill = traj.skill.to_string();
        if (traj.dt() - spec.dt).abs() > 1e-9 {
            outcomes.push(FilterOutcome {
                index,
                skill,
                kept: false,
                reason: Some(RejectReason::TimingMismatch {
                    traj_dt: traj.dt(),
                    env_dt: spec.dt,
                }),
                mean_tracking_error: None,
            });
            continue;
        }
        if let Some(reason) = precheck_limits(traj, spec) {
            outcomes.push(FilterOutcome {
                index,
                skill,
                kept: false,
                reason: Some(reason),
                mean_tracking_error: None,
            });
            continue;
        }
        match track_once(traj, spec, tracker)? {
            Err(fell_step) => outcomes.push(FilterOutcome {
                index,
                skill,
                kept: false,
                reason: Some(RejectReason::Fell { step: fell_step }),
                mean_tracking_error: None,
            }),
            Ok(mean_error) => {
                if mean_error > error_threshold {
                    outcomes.push(FilterOutcome {
                        index,
                        skill,
                        kept: false,
                        reason: Some(RejectReason::TrackingError {
                            mean_error,
                            threshold: error_threshold,
                        }),
                        mean_tracking_error: Some(mean_error),
                    });
                } else {
                    kept.push(traj.clone());
                    outcomes.push(FilterOutcome {
                        index,
                        skill,
                        kept: true,
                        reason: None,
                        mean_tracking_error: Some(mean_error),
                    });
                }
            }
        }
    }
    Ok((kept, RejectionReport { outcomes }))
}
