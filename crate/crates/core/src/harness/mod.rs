//! Experiment harness: configuration, seeded runs, sweeps and exact solves.

pub mod config;
pub mod output;
pub mod run;
pub mod solve;
pub mod sweep;

pub use config::{Algorithm, ExperimentConfig, MetricSpec, Plan, PolicySpec, ScheduleShape};
pub use run::{run_experiment, run_plan, run_seed, LogRow, RunLog, RunStatus, RunSummary};
pub use solve::{solve_command, SolveReport, SolveTarget};
pub use sweep::{sweep, SweepResult, SweepRow, SweepSpec};
