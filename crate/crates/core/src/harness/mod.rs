//! Scenario generators, parameter sweeps and robustness reporting.

pub mod report;
pub mod scenario;
pub mod sweep;

pub use report::{robustness_report, robustness_reports, trend_stat, RobustnessReport, SizeAggregate, Verdict};
pub use scenario::{make_scenario, GapGrowth, Scenario, ScenarioKind, SpacingGrowth};
pub use sweep::{run_sweep, run_sweep_records, CellResult, RunSummary, SweepConfig, DEFAULT_GAMMA};
