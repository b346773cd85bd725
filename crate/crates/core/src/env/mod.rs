//! Deterministic toy continuous-control environments.
//!
//! Every environment is a damped double integrator in its generalized
//! coordinates, stepped with semi-implicit Euler. States are values: `step`
//! returns a fresh state, so episodes can run in parallel with independent
//! generators.
//!
//! The observation layout is shared across the roster so policies transfer
//! between environments: `[q - q_ref, qdot - qdot_ref, qdot]` over the first
//! two coordinates (6 numbers). Tracking environments take the reference from
//! their attached reference trajectory at the phase-aligned frame; the
//! composite door environment synthesizes a stage-dependent virtual reference.

pub mod refs;
pub mod trace;

use serde::{Deserialize, Serialize};

pub use refs::{ref_generate, RefFrame, RefParams, RefTrajectory, Skill};
pub use trace::EpisodeTrace;

use crate::error::{Error, Result};
use crate::numkit::SeededRng;

/// Observation length shared by the whole roster.
pub const OBS_DIM: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    /// Elapsed steps.
    pub t: usize,
    /// Normalized position in the active reference period, in [0, 1).
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub next: EnvState,
    pub task_reward: f64,
    pub done: bool,
    pub fallen: bool,
}

/// Parameters of the multi-stage door task. The latch is a third
/// generalized coordinate in [0, 3] advanced by three gated stages:
/// [0, 1] alignment at the static waypoint before the door swings shut,
/// [1, 2] tracking the orbiting handle at matched velocity, and
/// [2, 3] docking still at the handle mount to pull it open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoorParams {
    pub mass: f64,
    pub damping: f64,
    /// Static alignment waypoint of stage one.
    pub waypoint: [f64; 2],
    pub align_radius: f64,
    pub align_speed: f64,
    pub align_rate: f64,
    /// Normalized phase after which stage-one alignment can no longer
    /// accrue (the door has swung shut).
    pub align_deadline_phase: f64,
    /// Center of the orbiting handle (also the stage-three dock target).
    pub handle_center: [f64; 2],
    pub handle_orbit_radius: f64,
    /// Orbit angular frequency (rad/s).
    pub handle_omega: f64,
    /// Stage-two gate: stay this close to the moving handle...
    pub track_radius: f64,
    /// ...with at most this velocity mismatch.
    pub track_rel_speed: f64,
    pub track_rate: f64,
    pub dock_radius: f64,
    pub dock_speed: f64,
    pub dock_rate: f64,
    /// Approach speed encoded in the guide during far-field travel.
    pub cruise_speed: f64,
    /// Lead distance of the guide carrot.
    pub carrot_lead: f64,
    /// Reward per unit of latch progress.
    pub latch_gain: f64,
}

impl Default for DoorParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            damping: 0.5,
            waypoint: [2.2, 0.0],
            align_radius: 0.3,
            align_speed: 0.22,
            align_rate: 2.5,
            align_deadline_phase: 0.4,
            handle_center: [2.2, 1.1],
            handle_orbit_radius: 0.3,
            handle_omega: 2.0 * std::f64::consts::PI * 0.25,
            track_radius: 0.35,
            track_rel_speed: 0.3,
            track_rate: 0.833,
            dock_radius: 0.3,
            dock_speed: 0.25,
            dock_rate: 2.5,
            cruise_speed: 0.6,
            carrot_lead: 0.5,
            latch_gain: 15.0,
        }
    }
}

impl DoorParams {
    /// Handle position and velocity at step t: an orbit with the same
    /// phase-offset structure as the walking gait.
    pub fn handle_at(&self, t: usize, dt: f64) -> ([f64; 2], [f64; 2]) {
        let a = self.handle_omega * t as f64 * dt;
        let r = self.handle_orbit_radius;
        (
            [
                self.handle_center[0] + r * a.sin(),
                self.handle_center[1] + r * a.cos(),
            ],
            [
                r * self.handle_omega * a.cos(),
                -r * self.handle_omega * a.sin(),
            ],
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvKind {
    /// Planar mass under force control; falls when it leaves its bounds.
    PointMass { mass: f64, damping: f64 },
    /// Two decoupled damped joints under torque control; falls past limits.
    TwoLinkArm { inertia: f64, damping: f64 },
    /// Cart with a sprung load offset; dropping the load ends the episode.
    CartCarry {
        mass: f64,
        damping: f64,
        load_stiffness: f64,
        load_damping: f64,
        coupling: f64,
    },
    /// Decelerate into a dock pose; entering the dock too fast is a crash.
    SeatDock {
        mass: f64,
        damping: f64,
        dock: [f64; 2],
        dock_radius: f64,
        crash_speed: f64,
    },
    CompositeDoor(DoorParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "predicate", rename_all = "snake_case")]
pub enum SuccessPredicate {
    /// Stay within `radius` of the phase-aligned reference for strictly more
    /// than `min_fraction` of the episode.
    TrackZone { radius: f64, min_fraction: f64 },
    /// Final distance of the first two coordinates to `target` strictly below
    /// `threshold`.
    FinalDistance { target: [f64; 2], threshold: f64 },
    /// Final distance and speed both strictly below their thresholds.
    FinalPose {
        target: [f64; 2],
        d_threshold: f64,
        v_threshold: f64,
    },
    /// Final latch coordinate strictly above `threshold`.
    LatchPulled { threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub name: String,
    pub kind: EnvKind,
    pub dof: usize,
    pub action_dim: usize,
    /// Seconds per step.
    pub dt: f64,
    pub episode_len: usize,
    pub joint_limits: Vec<[f64; 2]>,
    pub action_limits: Vec<[f64; 2]>,
    pub success_predicate: SuccessPredicate,
    pub reset_noise_q: f64,
    pub reset_noise_qdot: f64,
    pub rest_pose: Vec<f64>,
    /// Radius of the unit-reward tracking zone for tracking tasks.
    pub task_zone_radius: f64,
    /// Reference the task tracks; `None` for the composite door.
    pub reference: Option<RefTrajectory>,
}

impl EnvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dof == 0 || self.action_dim == 0 {
            return Err(Error::Invalid {
                what: "env spec",
                detail: "dof and action_dim must be positive".into(),
            });
        }
        if self.dt <= 0.0 || self.episode_len == 0 {
            return Err(Error::Invalid {
                what: "env spec",
                detail: "dt and episode_len must be positive".into(),
            });
        }
        if self.joint_limits.len() != self.dof || self.rest_pose.len() != self.dof {
            return Err(Error::ShapeMismatch {
                what: "env spec joint limits",
                expected: self.dof,
                got: self.joint_limits.len(),
            });
        }
        if self.action_limits.len() != self.action_dim {
            return Err(Error::ShapeMismatch {
                what: "env spec action limits",
                expected: self.action_dim,
                got: self.action_limits.len(),
            });
        }
        for lims in self.joint_limits.iter().chain(self.action_limits.iter()) {
            if !(lims[0] < lims[1]) {
                return Err(Error::Invalid {
                    what: "env spec",
                    detail: format!("limit pair [{}, {}] must satisfy lo < hi", lims[0], lims[1]),
                });
            }
        }
        if let Some(r) = &self.reference {
            if r.dof != self.dof {
                return Err(Error::ShapeMismatch {
                    what: "env spec reference",
                    expected: self.dof,
                    got: r.dof,
                });
            }
        }
        Ok(())
    }

    /// Period of the active reference; the episode length for the door.
    pub fn period(&self) -> f64 {
        match &self.reference {
            Some(r) => r.period,
            None => self.episode_len as f64 * self.dt,
        }
    }

    pub fn phase_of(&self, t: usize) -> f64 {
        let p = (t as f64 * self.dt) / self.period();
        p - p.floor()
    }

    pub fn clip_action(&self, a: &[f64]) -> Vec<f64> {
        a.iter()
            .zip(&self.action_limits)
            .map(|(v, lim)| v.clamp(lim[0], lim[1]))
            .collect()
    }
}

/// Initial state: rest pose plus uniform noise, zero velocity plus uniform
/// noise, clamped into joint limits. The door's latch coordinate starts at
/// exactly zero.
pub fn reset(spec: &EnvSpec, rng: &mut SeededRng) -> EnvState {
    let mut q = Vec::with_capacity(spec.dof);
    for j in 0..spec.dof {
        let latch_coord = matches!(spec.kind, EnvKind::CompositeDoor(_)) && j == 2;
        let noise = if latch_coord || spec.reset_noise_q == 0.0 {
            0.0
        } else {
            rng.uniform(-spec.reset_noise_q, spec.reset_noise_q)
        };
        let lims = spec.joint_limits[j];
        q.push((spec.rest_pose[j] + noise).clamp(lims[0], lims[1]));
    }
    let mut qdot = Vec::with_capacity(spec.dof);
    for j in 0..spec.dof {
        let latch_coord = matches!(spec.kind, EnvKind::CompositeDoor(_)) && j == 2;
        let noise = if latch_coord || spec.reset_noise_qdot == 0.0 {
            0.0
        } else {
            rng.uniform(-spec.reset_noise_qdot, spec.reset_noise_qdot)
        };
        qdot.push(noise);
    }
    EnvState {
        q,
        qdot,
        t: 0,
        phase: 0.0,
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

fn speed2(qdot: &[f64]) -> f64 {
    (qdot[0] * qdot[0] + qdot[1] * qdot[1]).sqrt()
}

/// Active reference for the observation: (q_ref, qdot_ref) over the first two
/// coordinates.
pub fn active_reference(spec: &EnvSpec, s: &EnvState) -> ([f64; 2], [f64; 2]) {
    if let EnvKind::CompositeDoor(p) = &spec.kind {
        return door_reference(p, s, spec.dt);
    }
    match &spec.reference {
        Some(r) => {
            let f = r.frame_at_phase(s.phase);
            ([f.q[0], f.q[1]], [f.qdot[0], f.qdot[1]])
        }
        None => ([spec.rest_pose[0], spec.rest_pose[1]], [0.0, 0.0]),
    }
}

/// Stage-dependent virtual reference for the door task. The far-field
/// approach guide is a carrot that leads toward the waypoint at cruise speed
/// while weaving laterally (a gait-like moving target); inside
/// `weave_off_dist` the guide straightens for clean docking, and inside the
/// stage radius it parks on the target. After the latch unlocks the guide
/// leads toward the handle with a tapering speed profile.
fn door_reference(p: &DoorParams, s: &EnvState, dt: f64) -> ([f64; 2], [f64; 2]) {
    let latch = s.q[2];
    let (target, taper) = if latch < 1.0 {
        (p.waypoint, false)
    } else {
        (p.latch_handle, true)
    };
    let d = dist2(&s.q, &target);
    let inner_radius = if latch < 1.0 { p.align_radius } else { p.pull_radius };
    if d <= inner_radius {
        return (target, [0.0, 0.0]);
    }
    let dir = [(target[0] - s.q[0]) / d, (target[1] - s.q[1]) / d];
    let lead = p.carrot_lead.min(d);
    let speed = if taper {
        p.cruise_speed.min(0.8 * d)
    } else {
        p.cruise_speed
    };
    let mut q_ref = [s.q[0] + dir[0] * lead, s.q[1] + dir[1] * lead];
    let mut qdot_ref = [dir[0] * speed, dir[1] * speed];
    if latch < 1.0 && d > p.weave_off_dist && p.weave_amplitude > 0.0 {
        let perp = [-dir[1], dir[0]];
        let phase = p.weave_omega * s.t as f64 * dt;
        let sway = p.weave_amplitude * phase.sin();
        let sway_v = p.weave_amplitude * p.weave_omega * phase.cos();
        q_ref[0] += perp[0] * sway;
        q_ref[1] += perp[1] * sway;
        qdot_ref[0] += perp[0] * sway_v;
        qdot_ref[1] += perp[1] * sway_v;
    }
    (q_ref, qdot_ref)
}

/// Shared observation: [q - q_ref, qdot - qdot_ref, qdot] over the first two
/// coordinates.
pub fn observe(spec: &EnvSpec, s: &EnvState) -> Vec<f64> {
    let (q_ref, qdot_ref) = active_reference(spec, s);
    vec![
        s.q[0] - q_ref[0],
        s.q[1] - q_ref[1],
        s.qdot[0] - qdot_ref[0],
        s.qdot[1] - qdot_ref[1],
        s.qdot[0],
        s.qdot[1],
    ]
}

fn acceleration(spec: &EnvSpec, s: &EnvState, a: &[f64]) -> Vec<f64> {
    match &spec.kind {
        EnvKind::PointMass { mass, damping } | EnvKind::SeatDock { mass, damping, .. } => (0..2)
            .map(|j| (a[j] - damping * s.qdot[j]) / mass)
            .collect(),
        EnvKind::TwoLinkArm { inertia, damping } => (0..2)
            .map(|j| (a[j] - damping * s.qdot[j]) / inertia)
            .collect(),
        EnvKind::CartCarry {
            mass,
            damping,
            load_stiffness,
            load_damping,
            coupling,
        } => {
            let cart_acc = (a[0] - damping * s.qdot[0]) / mass;
            let load_acc =
                -load_stiffness * s.q[1] - load_damping * s.qdot[1] - coupling * cart_acc + a[1];
            vec![cart_acc, load_acc]
        }
        EnvKind::CompositeDoor(p) => (0..2)
            .map(|j| (a[j] - p.damping * s.qdot[j]) / p.mass)
            .collect(),
    }
}

fn door_latch_rate(p: &DoorParams, q: &[f64], qdot: &[f64], phase: f64) -> f64 {
    let latch = q[2];
    if latch < 1.0 {
        if phase < p.align_deadline_phase
            && dist2(q, &p.waypoint) <= p.align_radius
            && speed2(qdot) <= p.align_speed
        {
            p.align_rate
        } else {
            0.0
        }
    } else if latch < 2.0 {
        if dist2(q, &p.latch_handle) <= p.pull_radius && speed2(qdot) <= p.pull_speed {
            p.pull_rate
        } else {
            0.0
        }
    } else {
        0.0
    }
}

fn fallen_predicate(spec: &EnvSpec, q: &[f64], qdot: &[f64]) -> bool {
    // Leaving the configured joint box is a fall for every environment.
    let dyn_dof = match &spec.kind {
        EnvKind::CompositeDoor(_) => 2,
        _ => spec.dof,
    };
    for j in 0..dyn_dof {
        let lims = spec.joint_limits[j];
        if q[j] < lims[0] || q[j] > lims[1] {
            return true;
        }
    }
    if let EnvKind::SeatDock {
        dock,
        dock_radius,
        crash_speed,
        ..
    } = &spec.kind
    {
        if dist2(q, dock) <= *dock_radius && speed2(qdot) > *crash_speed {
            return true;
        }
    }
    false
}

fn task_reward(spec: &EnvSpec, next: &EnvState, prev_latch: f64) -> f64 {
    match &spec.kind {
        EnvKind::CompositeDoor(p) => {
            let latch = next.q[2];
            let target = if latch < 1.0 { p.waypoint } else { p.latch_handle };
            let d = dist2(&next.q, &target);
            p.latch_gain * (latch - prev_latch) + 0.4 * (1.0 - (d / 4.0).min(1.0))
        }
        _ => {
            let (q_ref, _) = active_reference(spec, next);
            if dist2(&next.q, &q_ref) < spec.task_zone_radius {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Advance one step. Deterministic: identical (state, action) pairs yield
/// identical results. Non-finite actions are rejected; out-of-range actions
/// are clipped to the limits.
pub fn step(spec: &EnvSpec, s: &EnvState, action: &[f64]) -> Result<StepResult> {
    if action.len() != spec.action_dim {
        return Err(Error::ShapeMismatch {
            what: "action",
            expected: spec.action_dim,
            got: action.len(),
        });
    }
    if action.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("action"));
    }
    let a = spec.clip_action(action);

    let acc = acceleration(spec, s, &a);
    let mut qdot: Vec<f64> = s
        .qdot
        .iter()
        .take(acc.len())
        .zip(&acc)
        .map(|(v, ac)| v + spec.dt * ac)
        .collect();
    let mut q: Vec<f64> = s
        .q
        .iter()
        .take(acc.len())
        .zip(&qdot)
        .map(|(x, v)| x + spec.dt * v)
        .collect();

    let prev_latch = if matches!(spec.kind, EnvKind::CompositeDoor(_)) {
        s.q[2]
    } else {
        0.0
    };
    if let EnvKind::CompositeDoor(p) = &spec.kind {
        let rate = door_latch_rate(p, &s.q, &s.qdot, s.phase);
        let cap = if s.q[2] < 1.0 { 1.0 } else { 2.0 };
        let latch = (s.q[2] + spec.dt * rate).min(cap);
        q.push(latch);
        qdot.push(rate);
    }

    let t = s.t + 1;
    let next = EnvState {
        phase: spec.phase_of(t),
        q,
        qdot,
        t,
    };
    let fallen = fallen_predicate(spec, &next.q, &next.qdot);
    let reward = task_reward(spec, &next, prev_latch);
    let done = fallen || t >= spec.episode_len;
    Ok(StepResult {
        next,
        task_reward: reward,
        done,
        fallen,
    })
}

/// Episode-level success: no fall anywhere, and the task predicate holds.
/// All thresholds are strict inequalities.
pub fn success(spec: &EnvSpec, trace: &EpisodeTrace) -> bool {
    if trace.any_fallen() {
        return false;
    }
    match &spec.success_predicate {
        SuccessPredicate::TrackZone {
            radius,
            min_fraction,
        } => {
            let n = trace.states.len();
            if n == 0 {
                return false;
            }
            let mut hits = 0usize;
            for st in &trace.states {
                let (q_ref, _) = active_reference(spec, st);
                if dist2(&st.q, &q_ref) < *radius {
                    hits += 1;
                }
            }
            (hits as f64 / n as f64) > *min_fraction
        }
        SuccessPredicate::FinalDistance { target, threshold } => {
            let last = trace.final_state();
            dist2(&last.q, target) < *threshold
        }
        SuccessPredicate::FinalPose {
            target,
            d_threshold,
            v_threshold,
        } => {
            let last = trace.final_state();
            dist2(&last.q, target) < *d_threshold && speed2(&last.qdot) < *v_threshold
        }
        SuccessPredicate::LatchPulled { threshold } => trace.final_state().q[2] > *threshold,
    }
}

// ---------------------------------------------------------------------------
// Roster constructors
// ---------------------------------------------------------------------------

const DT: f64 = 0.02;
const EPISODE_LEN: usize = 500;

/// Planar point mass tracking the given skill's reference motion.
pub fn point_mass_env(skill: Skill) -> EnvSpec {
    let params = RefParams::for_skill(skill);
    let reference = ref_generate(skill, 2, DT, &params).expect("roster reference");
    let min_fraction = if skill == Skill::Stand { 0.9 } else { 0.7 };
    EnvSpec {
        name: format!("point-mass-2d:{skill}"),
        kind: EnvKind::PointMass {
            mass: 1.0,
            damping: 0.5,
        },
        dof: 2,
        action_dim: 2,
        dt: DT,
        episode_len: EPISODE_LEN,
        joint_limits: vec![[-5.0, 5.0], [-5.0, 5.0]],
        action_limits: vec![[-2.0, 2.0], [-2.0, 2.0]],
        success_predicate: SuccessPredicate::TrackZone {
            radius: 0.25,
            min_fraction,
        },
        reset_noise_q: 0.45,
        reset_noise_qdot: 0.35,
        rest_pose: vec![0.0, 0.0],
        task_zone_radius: 0.2,
        reference: Some(reference),
    }
}

/// Two decoupled joints reaching a goal pose along a minimum-jerk reference.
pub fn two_link_arm_env() -> EnvSpec {
    let params = RefParams::for_skill(Skill::Reach);
    let goal = params.goal_pose.clone().expect("reach goal");
    let reference = ref_generate(Skill::Reach, 2, DT, &params).expect("roster reference");
    EnvSpec {
        name: "two-link-arm:reach".into(),
        kind: EnvKind::TwoLinkArm {
            inertia: 1.0,
            damping: 0.5,
        },
        dof: 2,
        action_dim: 2,
        dt: DT,
        episode_len: EPISODE_LEN,
        joint_limits: vec![[-3.0, 3.0], [-3.0, 3.0]],
        action_limits: vec![[-2.0, 2.0], [-2.0, 2.0]],
        success_predicate: SuccessPredicate::FinalDistance {
            target: [goal[0], goal[1]],
            threshold: 0.1,
        },
        reset_noise_q: 0.35,
        reset_noise_qdot: 0.2,
        rest_pose: vec![0.0, 0.0],
        task_zone_radius: 0.2,
        reference: Some(reference),
    }
}

/// Cart with a sprung load, tracking the carry reference without dropping it.
pub fn cart_carry_env() -> EnvSpec {
    let params = RefParams::for_skill(Skill::Carry);
    let goal = params.goal_pose.clone().expect("carry goal");
    let reference = ref_generate(Skill::Carry, 2, DT, &params).expect("roster reference");
    EnvSpec {
        name: "cart-carry:carry".into(),
        kind: EnvKind::CartCarry {
            mass: 1.0,
            damping: 0.5,
            load_stiffness: 4.0,
            load_damping: 1.0,
            coupling: 0.4,
        },
        dof: 2,
        action_dim: 2,
        dt: DT,
        episode_len: EPISODE_LEN,
        joint_limits: vec![[-5.0, 5.0], [-0.6, 0.6]],
        action_limits: vec![[-2.0, 2.0], [-2.0, 2.0]],
        success_predicate: SuccessPredicate::FinalDistance {
            target: [goal[0], goal[1]],
            threshold: 0.2,
        },
        reset_noise_q: 0.1,
        reset_noise_qdot: 0.05,
        rest_pose: vec![0.0, 0.0],
        task_zone_radius: 0.25,
        reference: Some(reference),
    }
}

/// Decelerate into the dock pose; arriving fast is a crash.
pub fn seat_dock_env() -> EnvSpec {
    let params = RefParams::for_skill(Skill::Sit);
    let goal = params.goal_pose.clone().expect("sit goal");
    let reference = ref_generate(Skill::Sit, 2, DT, &params).expect("roster reference");
    EnvSpec {
        name: "seat-dock:sit".into(),
        kind: EnvKind::SeatDock {
            mass: 1.0,
            damping: 0.5,
            dock: [goal[0], goal[1]],
            dock_radius: 0.3,
            crash_speed: 1.2,
        },
        dof: 2,
        action_dim: 2,
        dt: DT,
        episode_len: EPISODE_LEN,
        joint_limits: vec![[-5.0, 5.0], [-5.0, 5.0]],
        action_limits: vec![[-2.0, 2.0], [-2.0, 2.0]],
        success_predicate: SuccessPredicate::FinalPose {
            target: [goal[0], goal[1]],
            d_threshold: 0.15,
            v_threshold: 0.2,
        },
        reset_noise_q: 0.2,
        reset_noise_qdot: 0.05,
        rest_pose: vec![0.0, 0.0],
        task_zone_radius: 0.25,
        reference: Some(reference),
    }
}

/// Multi-stage door task: approach the waypoint, settle, pull the latch.
pub fn composite_door_env() -> EnvSpec {
    EnvSpec {
        name: "composite-door".into(),
        kind: EnvKind::CompositeDoor(DoorParams::default()),
        dof: 3,
        action_dim: 2,
        dt: DT,
        episode_len: EPISODE_LEN,
        joint_limits: vec![[-1.5, 5.0], [-1.5, 2.5], [0.0, 2.0]],
        action_limits: vec![[-2.0, 2.0], [-2.0, 2.0]],
        success_predicate: SuccessPredicate::LatchPulled { threshold: 1.95 },
        reset_noise_q: 0.15,
        reset_noise_qdot: 0.05,
        rest_pose: vec![0.0, 0.0, 0.0],
        task_zone_radius: 0.2,
        reference: None,
    }
}

/// The environment a skill expert trains on.
pub fn skill_env(skill: Skill) -> EnvSpec {
    match skill {
        Skill::Stand | Skill::Walk | Skill::Run | Skill::Crawl => point_mass_env(skill),
        Skill::Reach => two_link_arm_env(),
        Skill::Carry => cart_carry_env(),
        Skill::Sit => seat_dock_env(),
    }
}

/// Resolve an environment by its roster name, e.g. "composite-door" or
/// "point-mass-2d:walk".
pub fn env_by_name(name: &str) -> Result<EnvSpec> {
    if name == "composite-door" {
        return Ok(composite_door_env());
    }
    if let Some(skill) = name.strip_prefix("point-mass-2d:") {
        return Ok(point_mass_env(skill.parse()?));
    }
    match name {
        "two-link-arm:reach" | "two-link-arm" => Ok(two_link_arm_env()),
        "cart-carry:carry" | "cart-carry" => Ok(cart_carry_env()),
        "seat-dock:sit" | "seat-dock" => Ok(seat_dock_env()),
        other => Err(Error::UnknownTag {
            kind: "environment",
            value: other.to_string(),
        }),
    }
}
