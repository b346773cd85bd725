//! Episode records and their CSV serialization.
//!
//! Row 0 carries the initial state with zeroed action columns; row t >= 1
//! carries the state after step t together with the action that produced it,
//! the task reward it earned, and the fall flag. Files open with a
//! `# skillweave trace v1` schema comment.

use std::io::Write;
use std::path::Path;

use crate::env::{EnvSpec, EnvState, StepResult};
use crate::error::{Error, Result};

pub const TRACE_SCHEMA: &str = "# skillweave trace v1";

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    /// States s_0 .. s_T (one more than the number of steps).
    pub states: Vec<EnvState>,
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub fallen: Vec<bool>,
}

impl EpisodeTrace {
    pub fn new(initial: EnvState) -> Self {
        Self {
            states: vec![initial],
            actions: Vec::new(),
            rewards: Vec::new(),
            fallen: Vec::new(),
        }
    }

    pub fn push(&mut self, action: Vec<f64>, result: &StepResult) {
        self.states.push(result.next.clone());
        self.actions.push(action);
        self.rewards.push(result.task_reward);
        self.fallen.push(result.fallen);
    }

    /// Number of steps taken.
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn final_state(&self) -> &EnvState {
        self.states.last().expect("trace holds the initial state")
    }

    pub fn any_fallen(&self) -> bool {
        self.fallen.iter().any(|&f| f)
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn header_fields(dof: usize, action_dim: usize, demo: bool) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for j in 0..dof {
        h.push(format!("q{j}"));
    }
    for j in 0..dof {
        h.push(format!("qdot{j}"));
    }
    for j in 0..action_dim {
        h.push(format!("a{j}"));
    }
    h.push("task_reward".into());
    h.push("fallen".into());
    if demo {
        h.push("expert_label".into());
        h.push("phase".into());
    }
    h
}

fn write_rows<W: std::io::Write>(
    wtr: &mut csv::Writer<W>,
    trace: &EpisodeTrace,
    dof: usize,
    action_dim: usize,
    labels: Option<&[usize]>,
) -> Result<()> {
    wtr.write_record(header_fields(dof, action_dim, labels.is_some()))?;
    for (i, st) in trace.states.iter().enumerate() {
        let mut row: Vec<String> = vec![st.t.to_string()];
        row.extend(st.q.iter().map(|&v| fmt_f64(v)));
        row.extend(st.qdot.iter().map(|&v| fmt_f64(v)));
        if i == 0 {
            row.extend(std::iter::repeat("0".to_string()).take(action_dim));
            row.push("0".into());
            row.push("0".into());
        } else {
            row.extend(trace.actions[i - 1].iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(trace.rewards[i - 1]));
            row.push(if trace.fallen[i - 1] { "1" } else { "0" }.into());
        }
        if let Some(labels) = labels {
            // Labels are 1-based in the file; row 0 has no action to label.
            let label = if i == 0 { 0 } else { labels[i - 1] + 1 };
            row.push(label.to_string());
            row.push(fmt_f64(st.phase));
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_trace_csv(path: &Path, spec: &EnvSpec, trace: &EpisodeTrace) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{TRACE_SCHEMA}")?;
    let mut wtr = csv::Writer::from_writer(file);
    write_rows(&mut wtr, trace, spec.dof, spec.action_dim, None)
}

/// Trace plus per-step expert labels (0-based in memory, 1-based on disk).
pub fn write_demo_csv(
    path: &Path,
    spec: &EnvSpec,
    trace: &EpisodeTrace,
    labels: &[usize],
) -> Result<()> {
    if labels.len() != trace.len() {
        return Err(Error::ShapeMismatch {
            what: "demo labels",
            expected: trace.len(),
            got: labels.len(),
        });
    }
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{TRACE_SCHEMA}")?;
    let mut wtr = csv::Writer::from_writer(file);
    write_rows(&mut wtr, trace, spec.dof, spec.action_dim, Some(labels))
}

fn parse_f64(field: &str, what: &'static str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("{what}: {e}")))
}

struct ParsedRows {
    trace: EpisodeTrace,
    labels: Vec<usize>,
}

fn read_rows(path: &Path, spec: &EnvSpec, demo: bool) -> Result<ParsedRows> {
    let file = std::fs::File::open(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(file);
    let dof = spec.dof;
    let adim = spec.action_dim;
    let expected_cols = 1 + 2 * dof + adim + 2 + if demo { 2 } else { 0 };

    let mut states = Vec::new();
    let mut actions = Vec::new();
    let mut rewards = Vec::new();
    let mut fallen = Vec::new();
    let mut labels = Vec::new();

    for (row_idx, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != expected_cols {
            return Err(Error::ShapeMismatch {
                what: "trace csv columns",
                expected: expected_cols,
                got: record.len(),
            });
        }
        let t: usize = record[0]
            .parse()
            .map_err(|e| Error::Parse(format!("trace t: {e}")))?;
        let mut col = 1;
        let mut q = Vec::with_capacity(dof);
        for _ in 0..dof {
            q.push(parse_f64(&record[col], "trace q")?);
            col += 1;
        }
        let mut qdot = Vec::with_capacity(dof);
        for _ in 0..dof {
            qdot.push(parse_f64(&record[col], "trace qdot")?);
            col += 1;
        }
        let mut action = Vec::with_capacity(adim);
        for _ in 0..adim {
            action.push(parse_f64(&record[col], "trace action")?);
            col += 1;
        }
        let reward = parse_f64(&record[col], "trace reward")?;
        col += 1;
        let fell = &record[col] == "1";
        col += 1;

        let phase = if demo {
            let label: usize = record[col]
                .parse()
                .map_err(|e| Error::Parse(format!("expert label: {e}")))?;
            let phase = parse_f64(&record[col + 1], "trace phase")?;
            if row_idx > 0 {
                if label == 0 {
                    return Err(Error::Parse("expert label must be >= 1 on action rows".into()));
                }
                labels.push(label - 1);
            }
            phase
        } else {
            spec.phase_of(t)
        };

        states.push(EnvState { q, qdot, t, phase });
        if row_idx > 0 {
            actions.push(action);
            rewards.push(reward);
            fallen.push(fell);
        }
    }

    if states.is_empty() {
        return Err(Error::EmptyInput("trace csv"));
    }
    Ok(ParsedRows {
        trace: EpisodeTrace {
            states,
            actions,
            rewards,
            fallen,
        },
        labels,
    })
}

pub fn read_trace_csv(path: &Path, spec: &EnvSpec) -> Result<EpisodeTrace> {
    Ok(read_rows(path, spec, false)?.trace)
}

pub fn read_demo_csv(path: &Path, spec: &EnvSpec) -> Result<(EpisodeTrace, Vec<usize>)> {
    let parsed = read_rows(path, spec, true)?;
    Ok((parsed.trace, parsed.labels))
}
