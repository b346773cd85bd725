//! Mapping source-skeleton motions onto a target configuration space.
//!
//! Each frame is an independent weighted least-squares problem: minimize the
//! position-alignment cost under box constraints by projected gradient
//! descent, then recompute velocities from the optimized positions so the
//! output keeps the reference-trajectory consistency invariant.

pub mod filter;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::refs::{RefFrame, RefTrajectory};
use crate::error::{Error, Result};

pub use filter::{
    feasibility_filter, FilterOutcome, PdTracker, RejectReason, RejectionReport,
    DEFAULT_TRACKING_THRESHOLD,
};

/// Linear correspondence between a source and a target skeleton, with a
/// diagonal positive weight over target coordinates and a velocity-term
/// weight.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkeletonMap {
    pub src_dof: usize,
    pub dst_dof: usize,
    /// Row-major `dst_dof x src_dof` matrix applied to source frames.
    pub correspondence: Vec<f64>,
    /// Diagonal weight entries, all strictly positive.
    pub weight: Vec<f64>,
    /// Weight on the velocity alignment term; zero disables it.
    pub velocity_weight: f64,
    pub dst_limits: Vec<[f64; 2]>,
}

impl SkeletonMap {
    /// Identity correspondence with unit weights and the given limits.
    pub fn identity(dof: usize, limits: Vec<[f64; 2]>, velocity_weight: f64) -> Self {
        let mut correspondence = vec![0.0; dof * dof];
        for j in 0..dof {
            correspondence[j * dof + j] = 1.0;
        }
        Self {
            src_dof: dof,
            dst_dof: dof,
            correspondence,
            weight: vec![1.0; dof],
            velocity_weight,
            dst_limits: limits,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.correspondence.len() != self.src_dof * self.dst_dof {
            return Err(Error::ShapeMismatch {
                what: "correspondence matrix",
                expected: self.src_dof * self.dst_dof,
                got: self.correspondence.len(),
            });
        }
        if self.correspondence.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("correspondence matrix"));
        }
        if self.weight.len() != self.dst_dof || self.dst_limits.len() != self.dst_dof {
            return Err(Error::ShapeMismatch {
                what: "skeleton weights/limits",
                expected: self.dst_dof,
                got: self.weight.len(),
            });
        }
        if self.weight.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Invalid {
                what: "skeleton weight",
                detail: "diagonal entries must be strictly positive".into(),
            });
        }
        if self.velocity_weight < 0.0 || !self.velocity_weight.is_finite() {
            return Err(Error::Invalid {
                what: "velocity weight",
                detail: "must be finite and >= 0".into(),
            });
        }
        Ok(())
    }

    /// Apply the correspondence to a source vector.
    pub fn map_vec(&self, src: &[f64]) -> Vec<f64> {
        (0..self.dst_dof)
            .map(|r| {
                let row = &self.correspondence[r * self.src_dof..(r + 1) * self.src_dof];
                row.iter().zip(src).map(|(c, s)| c * s).sum()
            })
            .collect()
    }

    pub fn clamp(&self, q: &mut [f64]) {
        for (v, lim) in q.iter_mut().zip(&self.dst_limits) {
            *v = v.clamp(lim[0], lim[1]);
        }
    }
}

/// Weighted state-alignment cost:
/// `sum_j W_j (q_j - q_ref_j)^2 + gamma_v * sum_j W_j (qdot_j - qdot_ref_j)^2`.
pub fn alignment_cost(
    q: &[f64],
    qdot: &[f64],
    q_ref: &[f64],
    qdot_ref: &[f64],
    map: &SkeletonMap,
) -> Result<f64> {
    let n = map.dst_dof;
    if q.len() != n || qdot.len() != n || q_ref.len() != n || qdot_ref.len() != n {
        return Err(Error::ShapeMismatch {
            what: "alignment vectors",
            expected: n,
            got: q.len().max(qdot.len()).max(q_ref.len()).max(qdot_ref.len()),
        });
    }
    let mut pos = 0.0;
    let mut vel = 0.0;
    for j in 0..n {
        let dq = q[j] - q_ref[j];
        let dv = qdot[j] - qdot_ref[j];
        pos += map.weight[j] * dq * dq;
        vel += map.weight[j] * dv * dv;
    }
    Ok(pos + map.velocity_weight * vel)
}

/// Retargeted trajectory plus the final alignment residual and iteration
/// count per frame.
#[derive(Debug, Clone)]
pub struct RetargetResult {
    pub trajectory: RefTrajectory,
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
}

/// One projected-gradient descent on the position alignment cost
/// `sum_j W_j (q_j - target_j)^2`, starting from `init`. Iterates are clamped
/// into the target limits after every step; the loop stops when the cost
/// decrease drops below 1e-10 or at `max_iters`. Returns the final point, the
/// iteration count, and the cost after each iteration.
pub fn descend_frame(
    init: &[f64],
    target: &[f64],
    map: &SkeletonMap,
    max_iters: usize,
    lr: f64,
) -> (Vec<f64>, usize, Vec<f64>) {
    let cost = |q: &[f64]| -> f64 {
        q.iter()
            .zip(target)
            .zip(&map.weight)
            .map(|((qj, rj), w)| w * (qj - rj) * (qj - rj))
            .sum()
    };
    let mut q = init.to_vec();
    map.clamp(&mut q);
    let mut current = cost(&q);
    let mut history = Vec::new();
    let mut iters = 0;
    for _ in 0..max_iters {
        let mut next = q.clone();
        for j in 0..map.dst_dof {
            next[j] -= lr * 2.0 * map.weight[j] * (next[j] - target[j]);
        }
        map.clamp(&mut next);
        let next_cost = cost(&next);
        iters += 1;
        if next_cost <= current {
            q = next;
        }
        let decrease = current - next_cost;
        current = current.min(next_cost);
        history.push(current);
        if decrease < 1e-10 {
            break;
        }
    }
    (q, iters, history)
}

/// Map every source frame through the correspondence, solve the per-frame
/// constrained alignment problem, and rebuild velocities by forward
/// differences of the optimized positions. The final frame, which has no
/// forward difference, takes the mapped reference velocity. Residuals report
/// the full alignment cost, velocity term included, and are never an error.
pub fn retarget_ik(
    src: &RefTrajectory,
    map: &SkeletonMap,
    max_iters: usize,
    lr: f64,
) -> Result<RetargetResult> {
    map.validate()?;
    if src.dof != map.src_dof {
        return Err(Error::ShapeMismatch {
            what: "retarget source dof",
            expected: map.src_dof,
            got: src.dof,
        });
    }
    let targets: Vec<(Vec<f64>, Vec<f64>)> = src
        .frames
        .iter()
        .map(|f| (map.map_vec(&f.q), map.map_vec(&f.qdot)))
        .collect();

    // Frames are independent problems; solve them in parallel. The warm
    // start is the clamped target, the unconstrained minimizer.
    let solved: Vec<(Vec<f64>, usize)> = targets
        .par_iter()
        .map(|(q_ref, _)| {
            let (q, iters, _) = descend_frame(q_ref, q_ref, map, max_iters, lr);
            (q, iters)
        })
        .collect();

    let n = solved.len();
    let dt = src.dt();
    let mut frames: Vec<RefFrame> = Vec::with_capacity(n);
    for k in 0..n {
        let q = solved[k].0.clone();
        let qdot = if k + 1 < n {
            (0..map.dst_dof)
                .map(|j| (solved[k + 1].0[j] - q[j]) / dt)
                .collect()
        } else {
            targets[k].1.clone()
        };
        frames.push(RefFrame { q, qdot });
    }

    let mut residuals = Vec::with_capacity(n);
    for k in 0..n {
        residuals.push(alignment_cost(
            &frames[k].q,
            &frames[k].qdot,
            &targets[k].0,
            &targets[k].1,
            map,
        )?);
    }
    let iterations = solved.into_iter().map(|(_, it)| it).collect();

    Ok(RetargetResult {
        trajectory: RefTrajectory {
            skill: src.skill,
            frames,
            period: src.period,
            dof: map.dst_dof,
        },
        residuals,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::refs::{ref_generate, RefParams, Skill};

    fn wide_limits(dof: usize) -> Vec<[f64; 2]> {
        vec![[-100.0, 100.0]; dof]
    }

    fn walk_src() -> RefTrajectory {
        ref_generate(Skill::Walk, 2, 0.02, &RefParams::for_skill(Skill::Walk)).unwrap()
    }

    #[test]
    fn alignment_cost_zero_at_perfect_match() {
        let map = SkeletonMap::identity(3, wide_limits(3), 0.5);
        let q = [0.4, -0.2, 1.0];
        let qd = [0.1, 0.0, -0.3];
        let c = alignment_cost(&q, &qd, &q, &qd, &map).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn alignment_cost_hand_evaluated() {
        // W = I, gamma_v = 0, position error [3, 4] -> 9 + 16 = 25.
        let map = SkeletonMap::identity(2, wide_limits(2), 0.0);
        let c = alignment_cost(&[3.0, 4.0], &[1.0, 1.0], &[0.0, 0.0], &[0.0, 0.0], &map).unwrap();
        assert_eq!(c, 25.0);
    }

    #[test]
    fn alignment_cost_linear_in_weights() {
        let mut map = SkeletonMap::identity(2, wide_limits(2), 0.3);
        let q = [1.0, 2.0];
        let qd = [0.5, -0.5];
        let qr = [0.0, 1.0];
        let qdr = [0.0, 0.0];
        let c1 = alignment_cost(&q, &qd, &qr, &qdr, &map).unwrap();
        map.weight = vec![2.0, 2.0];
        let c2 = alignment_cost(&q, &qd, &qr, &qdr, &map).unwrap();
        assert!((c2 - 2.0 * c1).abs() < 1e-12);
    }

    #[test]
    fn alignment_cost_nonzero_whenever_states_differ() {
        let map = SkeletonMap::identity(2, wide_limits(2), 0.5);
        let c = alignment_cost(&[1.0, 0.0], &[0.0, 0.0], &[1.0, 0.0], &[0.1, 0.0], &map).unwrap();
        assert!(c > 0.0);
    }

    #[test]
    fn identity_retarget_reproduces_source() {
        let src = walk_src();
        let map = SkeletonMap::identity(2, wide_limits(2), 0.1);
        let out = retarget_ik(&src, &map, 200, 0.1).unwrap();
        assert_eq!(out.trajectory.n_frames(), src.n_frames());
        for (a, b) in out.trajectory.frames.iter().zip(&src.frames) {
            for j in 0..2 {
                assert!((a.q[j] - b.q[j]).abs() < 1e-9);
            }
        }
        for &r in &out.residuals {
            assert!(r < 1e-8, "residual {r}");
        }
        out.trajectory.validate(1e-6).unwrap();
    }

    #[test]
    fn scaling_correspondence_scales_output() {
        let src = walk_src();
        let mut map = SkeletonMap::identity(2, wide_limits(2), 0.1);
        for v in map.correspondence.iter_mut() {
            *v *= 0.5;
        }
        let out = retarget_ik(&src, &map, 200, 0.1).unwrap();
        for (a, b) in out.trajectory.frames.iter().zip(&src.frames) {
            for j in 0..2 {
                assert!((a.q[j] - 0.5 * b.q[j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn limits_pin_output_with_expected_residual() {
        // Constant source at 1.0; target limits cap at 0.25. The optimum is
        // the boundary point, and the residual is the clamped-distance cost
        // evaluated there: W_j * (1.0 - 0.25)^2 summed (velocities all zero).
        let mut params = RefParams::for_skill(Skill::Stand);
        params.rest_pose = Some(vec![1.0, 1.0]);
        let src = ref_generate(Skill::Stand, 2, 0.02, &params).unwrap();
        let map = SkeletonMap {
            src_dof: 2,
            dst_dof: 2,
            correspondence: vec![1.0, 0.0, 0.0, 1.0],
            weight: vec![1.0, 2.0],
            velocity_weight: 0.1,
            dst_limits: vec![[-0.25, 0.25], [-0.25, 0.25]],
        };
        let out = retarget_ik(&src, &map, 200, 0.1).unwrap();
        let want = 1.0 * 0.75f64.powi(2) + 2.0 * 0.75f64.powi(2);
        for f in &out.trajectory.frames {
            assert!((f.q[0] - 0.25).abs() < 1e-12);
            assert!((f.q[1] - 0.25).abs() < 1e-12);
        }
        for &r in &out.residuals {
            assert!((r - want).abs() < 1e-9, "residual {r} want {want}");
        }
    }

    #[test]
    fn descent_is_monotone_from_cold_start() {
        let map = SkeletonMap::identity(3, wide_limits(3), 0.0);
        let target = [2.0, -1.5, 0.7];
        let (q, _, history) = descend_frame(&[10.0, 10.0, -10.0], &target, &map, 200, 0.1);
        for w in history.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "cost increased: {} -> {}", w[0], w[1]);
        }
        for j in 0..3 {
            assert!((q[j] - target[j]).abs() < 1e-4);
        }
    }

    #[test]
    fn dof_mismatch_is_rejected() {
        let src = walk_src();
        let map = SkeletonMap::identity(3, wide_limits(3), 0.1);
        assert!(retarget_ik(&src, &map, 10, 0.1).is_err());
    }
}
