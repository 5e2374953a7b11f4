//! Swarm simulation and reliability qualification.
//!
//! Simulates swarms under several control laws and measures, at sampled
//! times, the normalized inverse-square pair energy, the frame potential and
//! optimal frame bounds of the agent configuration, the fraction of the
//! bounding cube covered by δ-balls, the minimum separation, and the spread
//! of velocities about the mean. Sweeps over swarm size then test whether
//! energy bounded independently of `n` comes with coverage bounded below
//! independently of `n`.

// `!(x > 0.0)` is used on purpose: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controllers;
pub mod eigen;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod metrics;
pub mod output;

pub use controllers::{ControlLaw, ControllerKind, ControllerSpec};
pub use engine::{run, RunConfig, RunRecord, Violation, ViolationKind};
pub use error::{Error, Result};
pub use geometry::{AgentState, Cube, SwarmState, Vector};
pub use harness::{RobustnessReport, RunSummary, Scenario, ScenarioKind, SweepConfig, Verdict};
pub use metrics::{CoverageEstimate, FrameBounds, MetricsSample};
