//! Synthetic reference motions. Each skill tag expands to a phase-indexed
//! sequence of (position, velocity) frames over one period.
//!
//! Velocity frames are analytic; position frames are the discrete integral
//! `q[k+1] = q[k] + dt * qdot[k]`, so stored velocities agree exactly with
//! forward differences of stored positions. Downstream consumers rely on that
//! consistency when they recompute velocities after editing positions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Skill {
    Stand,
    Walk,
    Run,
    Sit,
    Carry,
    Reach,
    Crawl,
}

impl Skill {
    pub const ALL: [Skill; 7] = [
        Skill::Stand,
        Skill::Walk,
        Skill::Run,
        Skill::Sit,
        Skill::Carry,
        Skill::Reach,
        Skill::Crawl,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Skill::Stand => "stand",
            Skill::Walk => "walk",
            Skill::Run => "run",
            Skill::Sit => "sit",
            Skill::Carry => "carry",
            Skill::Reach => "reach",
            Skill::Crawl => "crawl",
        }
    }
}

impl fmt::Display for Skill {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Skill {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stand" => Ok(Skill::Stand),
            "walk" => Ok(Skill::Walk),
            "run" => Ok(Skill::Run),
            "sit" => Ok(Skill::Sit),
            "carry" => Ok(Skill::Carry),
            "reach" => Ok(Skill::Reach),
            "crawl" => Ok(Skill::Crawl),
            other => Err(Error::UnknownTag {
                kind: "skill",
                value: other.to_string(),
            }),
        }
    }
}

/// One reference frame: desired position and velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefFrame {
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
}

/// Phase-indexed reference states over one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefTrajectory {
    pub skill: Skill,
    pub frames: Vec<RefFrame>,
    /// Seconds per cycle.
    pub period: f64,
    pub dof: usize,
}

impl RefTrajectory {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn dt(&self) -> f64 {
        self.period / self.frames.len() as f64
    }

    /// Frame index for a phase in [0, 1): floor(phase * n), clamped.
    pub fn frame_at_phase(&self, phase: f64) -> &RefFrame {
        let n = self.frames.len();
        let idx = ((phase * n as f64).floor() as usize).min(n - 1);
        &self.frames[idx]
    }

    /// Check finiteness, shapes, and velocity/position consistency.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.frames.len() < 2 {
            return Err(Error::Invalid {
                what: "reference trajectory",
                detail: "need at least two frames".into(),
            });
        }
        let dt = self.dt();
        for (k, f) in self.frames.iter().enumerate() {
            if f.q.len() != self.dof || f.qdot.len() != self.dof {
                return Err(Error::ShapeMismatch {
                    what: "reference frame",
                    expected: self.dof,
                    got: f.q.len(),
                });
            }
            if f.q.iter().chain(f.qdot.iter()).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("reference frame"));
            }
            if k + 1 < self.frames.len() {
                let next = &self.frames[k + 1];
                for j in 0..self.dof {
                    let fd = (next.q[j] - f.q[j]) / dt;
                    if (fd - f.qdot[j]).abs() > tol {
                        return Err(Error::Invalid {
                            what: "reference trajectory",
                            detail: format!(
                                "frame {k} dof {j}: velocity {} vs finite difference {fd}",
                                f.qdot[j]
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Amplitude/frequency parameter map for [`ref_generate`]. Unused entries are
/// ignored by skills that do not need them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefParams {
    /// Oscillation amplitude per dof (walk/run/crawl). Scalar applied to all.
    pub amplitude: f64,
    /// Cycles per second (walk/run/crawl).
    pub frequency: f64,
    /// Per-dof phase offsets; default staggers by pi/2.
    pub phase_offsets: Option<Vec<f64>>,
    /// Nominal rest pose; default zeros.
    pub rest_pose: Option<Vec<f64>>,
    /// Goal pose (reach/sit/carry); default zeros.
    pub goal_pose: Option<Vec<f64>>,
    /// Seconds per cycle.
    pub period: f64,
}

impl Default for RefParams {
    fn default() -> Self {
        Self {
            amplitude: 0.4,
            frequency: 0.25,
            phase_offsets: None,
            rest_pose: None,
            goal_pose: None,
            period: 4.0,
        }
    }
}

impl RefParams {
    /// Skill-flavored defaults: run is a faster, tighter walk; crawl slower
    /// and lower still.
    pub fn for_skill(skill: Skill) -> Self {
        let mut p = Self::default();
        match skill {
            Skill::Run => {
                p.amplitude = 0.15;
                p.frequency = 0.5;
            }
            Skill::Crawl => {
                p.amplitude = 0.2;
                p.frequency = 0.125;
                p.period = 8.0;
            }
            Skill::Reach => {
                p.goal_pose = Some(vec![0.9, 0.6]);
            }
            Skill::Sit => {
                p.goal_pose = Some(vec![0.3, -0.5]);
            }
            Skill::Carry => {
                p.goal_pose = Some(vec![1.5, 0.0]);
                p.period = 6.0;
            }
            _ => {}
        }
        p
    }

    fn rest(&self, dof: usize) -> Vec<f64> {
        self.rest_pose.clone().unwrap_or_else(|| vec![0.0; dof])
    }

    fn goal(&self, dof: usize) -> Vec<f64> {
        self.goal_pose.clone().unwrap_or_else(|| vec![0.0; dof])
    }

    fn offsets(&self, dof: usize) -> Vec<f64> {
        self.phase_offsets
            .clone()
            .unwrap_or_else(|| (0..dof).map(|j| j as f64 * std::f64::consts::FRAC_PI_2).collect())
    }
}

/// Analytic velocity profile of the minimum-jerk blend s(u) = 10u^3 - 15u^4 + 6u^5.
fn min_jerk_speed(u: f64) -> f64 {
    30.0 * u * u * (1.0 - u) * (1.0 - u)
}

/// Cosine-eased keyframe velocity: moving from a to b over [t0, t1].
fn keyframe_velocity(t: f64, keys: &[(f64, Vec<f64>)], dof: usize) -> Vec<f64> {
    for w in keys.windows(2) {
        let (t0, ref a) = w[0];
        let (t1, ref b) = w[1];
        if t >= t0 && t < t1 {
            let span = t1 - t0;
            let u = (t - t0) / span;
            let scale = std::f64::consts::PI * (std::f64::consts::PI * u).sin() / (2.0 * span);
            return (0..dof).map(|j| (b[j] - a[j]) * scale).collect();
        }
    }
    vec![0.0; dof]
}

/// Generate the reference motion for a skill.
///
/// stand holds the rest pose; walk/run/crawl oscillate each dof with the
/// given amplitude and frequency; reach follows a minimum-jerk profile from
/// rest to goal; sit and carry interpolate through keyframes.
pub fn ref_generate(skill: Skill, dof: usize, dt: f64, params: &RefParams) -> Result<RefTrajectory> {
    if dof == 0 {
        return Err(Error::Invalid {
            what: "reference dof",
            detail: "dof must be positive".into(),
        });
    }
    if dt <= 0.0 || params.period <= 0.0 {
        return Err(Error::Invalid {
            what: "reference timing",
            detail: "dt and period must be positive".into(),
        });
    }
    let n = (params.period / dt).round() as usize;
    if n < 2 {
        return Err(Error::Invalid {
            what: "reference timing",
            detail: format!("period {} too short for dt {dt}", params.period),
        });
    }
    let rest = params.rest(dof);
    if rest.len() != dof {
        return Err(Error::ShapeMismatch {
            what: "rest pose",
            expected: dof,
            got: rest.len(),
        });
    }

    // Analytic velocity at frame time t_k for each skill.
    let velocity_at: Box<dyn Fn(f64) -> Vec<f64>> = match skill {
        Skill::Stand => Box::new(move |_t| vec![0.0; dof]),
        Skill::Walk | Skill::Run | Skill::Crawl => {
            let omega = 2.0 * std::f64::consts::PI * params.frequency;
            let amp = params.amplitude;
            let offsets = params.offsets(dof);
            Box::new(move |t| {
                (0..dof)
                    .map(|j| amp * omega * (omega * t + offsets[j]).cos())
                    .collect()
            })
        }
        Skill::Reach => {
            let goal = params.goal(dof);
            let rest = rest.clone();
            let period = params.period;
            Box::new(move |t| {
                let u = (t / period).clamp(0.0, 1.0);
                let s = min_jerk_speed(u) / period;
                (0..dof).map(|j| (goal[j] - rest[j]) * s).collect()
            })
        }
        Skill::Sit => {
            let goal = params.goal(dof);
            let keys = vec![
                (0.0, rest.clone()),
                (0.2 * params.period, rest.clone()),
                (0.7 * params.period, goal.clone()),
                (params.period, goal),
            ];
            Box::new(move |t| keyframe_velocity(t, &keys, dof))
        }
        Skill::Carry => {
            let goal = params.goal(dof);
            let keys = vec![
                (0.0, rest.clone()),
                (0.1 * params.period, rest.clone()),
                (0.9 * params.period, goal.clone()),
                (params.period, goal),
            ];
            Box::new(move |t| keyframe_velocity(t, &keys, dof))
        }
    };

    let mut frames = Vec::with_capacity(n);
    let mut q = rest;
    for k in 0..n {
        let t = k as f64 * dt;
        let qdot = velocity_at(t);
        frames.push(RefFrame {
            q: q.clone(),
            qdot: qdot.clone(),
        });
        for j in 0..dof {
            q[j] += dt * qdot[j];
        }
    }

    let traj = RefTrajectory {
        skill,
        frames,
        period: params.period,
        dof,
    };
    traj.validate(1e-6)?;
    Ok(traj)
}

/// Write a reference trajectory in the shared frame CSV layout
/// (`t,q...,qdot...`), with skill/period metadata on the schema comment line.
pub fn write_ref_csv(path: &std::path::Path, traj: &RefTrajectory) -> Result<()> {
    use std::io::Write;
    let mut file = std::fs::File::create(path)?;
    writeln!(
        file,
        "# skillweave ref v1 skill={} period={} dof={}",
        traj.skill, traj.period, traj.dof
    )?;
    let mut wtr = csv::Writer::from_writer(file);
    let mut header = vec!["t".to_string()];
    for j in 0..traj.dof {
        header.push(format!("q{j}"));
    }
    for j in 0..traj.dof {
        header.push(format!("qdot{j}"));
    }
    wtr.write_record(&header)?;
    for (k, f) in traj.frames.iter().enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(f.q.iter().map(|v| format!("{v}")));
        row.extend(f.qdot.iter().map(|v| format!("{v}")));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Read a reference trajectory written by [`write_ref_csv`].
pub fn read_ref_csv(path: &std::path::Path) -> Result<RefTrajectory> {
    use std::io::BufRead;
    let file = std::fs::File::open(path)?;
    let mut reader = std::io::BufReader::new(file);
    let mut meta_line = String::new();
    reader.read_line(&mut meta_line)?;
    let meta_line = meta_line.trim();
    if !meta_line.starts_with("# skillweave ref v1") {
        return Err(Error::Parse(format!(
            "missing reference schema comment, got: {meta_line}"
        )));
    }
    let mut skill = None;
    let mut period = None;
    let mut dof = None;
    for token in meta_line.split_whitespace() {
        if let Some(v) = token.strip_prefix("skill=") {
            skill = Some(v.parse::<Skill>()?);
        } else if let Some(v) = token.strip_prefix("period=") {
            period = Some(
                v.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("ref period: {e}")))?,
            );
        } else if let Some(v) = token.strip_prefix("dof=") {
            dof = Some(
                v.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("ref dof: {e}")))?,
            );
        }
    }
    let (skill, period, dof) = match (skill, period, dof) {
        (Some(s), Some(p), Some(d)) => (s, p, d),
        _ => {
            return Err(Error::Parse(
                "reference schema comment missing skill/period/dof".into(),
            ))
        }
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let mut frames = Vec::new();
    for record in rdr.records() {
        let record = record?;
        if record.len() != 1 + 2 * dof {
            return Err(Error::ShapeMismatch {
                what: "reference csv columns",
                expected: 1 + 2 * dof,
                got: record.len(),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("ref frame value: {e}")))
        };
        let q = (0..dof)
            .map(|j| parse(&record[1 + j]))
            .collect::<Result<Vec<_>>>()?;
        let qdot = (0..dof)
            .map(|j| parse(&record[1 + dof + j]))
            .collect::<Result<Vec<_>>>()?;
        frames.push(RefFrame { q, qdot });
    }
    let traj = RefTrajectory {
        skill,
        frames,
        period,
        dof,
    };
    traj.validate(1e-6)?;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stand_is_constant_rest_pose() {
        let p = RefParams::for_skill(Skill::Stand);
        let traj = ref_generate(Skill::Stand, 2, 0.02, &p).unwrap();
        for f in &traj.frames {
            assert_eq!(f.q, vec![0.0, 0.0]);
            assert_eq!(f.qdot, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn zero_amplitude_walk_equals_stand() {
        let mut p = RefParams::for_skill(Skill::Walk);
        p.amplitude = 0.0;
        let walk = ref_generate(Skill::Walk, 2, 0.02, &p).unwrap();
        let stand = ref_generate(Skill::Stand, 2, 0.02, &RefParams::for_skill(Skill::Stand)).unwrap();
        for (a, b) in walk.frames.iter().zip(&stand.frames) {
            assert_eq!(a.q, b.q);
            assert_eq!(a.qdot, b.qdot);
        }
    }

    #[test]
    fn walk_velocity_matches_symbolic_derivative() {
        // The position curve is rest + A sin(omega t + phi); its derivative is
        // A omega cos(omega t + phi). Stored velocities must match that
        // expression at each frame time to 1e-9.
        let p = RefParams::for_skill(Skill::Walk);
        let traj = ref_generate(Skill::Walk, 2, 0.02, &p).unwrap();
        let omega = 2.0 * std::f64::consts::PI * p.frequency;
        let dt = traj.dt();
        for (k, f) in traj.frames.iter().enumerate() {
            let t = k as f64 * dt;
            for j in 0..2 {
                let phi = j as f64 * std::f64::consts::FRAC_PI_2;
                let want = p.amplitude * omega * (omega * t + phi).cos();
                assert!(
                    (f.qdot[j] - want).abs() < 1e-9,
                    "frame {k} dof {j}: {} vs {want}",
                    f.qdot[j]
                );
            }
        }
    }

    #[test]
    fn velocity_consistent_with_finite_difference() {
        for skill in Skill::ALL {
            let p = RefParams::for_skill(skill);
            let traj = ref_generate(skill, 2, 0.02, &p).unwrap();
            traj.validate(1e-6).unwrap();
        }
    }

    #[test]
    fn run_is_faster_than_walk() {
        assert!(RefParams::for_skill(Skill::Run).frequency > RefParams::for_skill(Skill::Walk).frequency);
    }

    #[test]
    fn reach_ends_at_goal() {
        let p = RefParams::for_skill(Skill::Reach);
        let traj = ref_generate(Skill::Reach, 2, 0.02, &p).unwrap();
        let last = traj.frames.last().unwrap();
        let goal = p.goal_pose.clone().unwrap();
        for j in 0..2 {
            // Discrete integration tracks the analytic curve to O(dt).
            assert!(
                (last.q[j] - goal[j]).abs() < 0.02,
                "dof {j}: {} vs {}",
                last.q[j],
                goal[j]
            );
        }
    }

    #[test]
    fn frame_at_phase_floors() {
        let p = RefParams::for_skill(Skill::Walk);
        let traj = ref_generate(Skill::Walk, 2, 0.02, &p).unwrap();
        let n = traj.n_frames();
        assert_eq!(
            traj.frame_at_phase(0.0) as *const _,
            &traj.frames[0] as *const _
        );
        assert_eq!(
            traj.frame_at_phase(0.999999) as *const _,
            &traj.frames[n - 1] as *const _
        );
    }

    #[test]
    fn unknown_skill_tag_is_parse_error() {
        assert!(matches!(
            "moonwalk".parse::<Skill>(),
            Err(Error::UnknownTag { .. })
        ));
    }

    #[test]
    fn ref_csv_roundtrip() {
        let p = RefParams::for_skill(Skill::Run);
        let traj = ref_generate(Skill::Run, 2, 0.02, &p).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        write_ref_csv(&path, &traj).unwrap();
        let back = read_ref_csv(&path).unwrap();
        assert_eq!(back, traj);
    }
}
