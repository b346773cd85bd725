//! skillweave: a desk-scale continuous-control lab.
//!
//! The crate trains one specialized policy per motor skill against synthetic
//! reference motions (energy-shaped imitation rewards, latent world models,
//! sampling-based planners), then composes the frozen experts at runtime with
//! a small routing network distilled from a file-based semantic oracle.
//!
//! Modules:
//! - [`numkit`]: dense nets with exact gradients, simplex/KL utilities, RNG.
//! - [`env`]: deterministic toy environments and reference-motion generators.
//! - [`retarget`]: trajectory alignment onto a target skeleton plus a
//!   feasibility filter.
//! - [`expert`]: per-skill policy training with imitation rewards.
//! - [`planner`]: latent world model with MPPI/CEM trajectory optimization.
//! - [`router`]: semantic routing network, distillation losses, oracle I/O.
//! - [`harness`]: experiment orchestration, metrics, schedules, CSV artifacts.

pub mod error;
pub mod numkit;

pub mod env;
pub mod retarget;

pub mod expert;
pub mod planner;
pub mod router;

pub mod harness;

pub use error::{Error, Result};
