//! Experiment harness: metric definitions, stage schedules, and the seeded
//! experiment runner with its ablation-mode matrix.

pub mod experiment;
pub mod metrics;
pub mod schedule;

pub use experiment::{
    evaluate_single_expert, read_curve_csv, run_experiment, AblationMode, ExperimentConfig,
    MetricsRecord, RunOutput, SuccessRate, CURVE_SCHEMA,
};
pub use metrics::{convergence_step, peak_return, stderr, success_rate};
pub use schedule::{default_letter_map, format_schedule, parse_schedule, StageSchedule};
