//! Experiment presets, Monte Carlo runs over seeded drops, aggregation and
//! CSV/JSON output.

mod config;
mod output;
mod run;
mod verify;

pub use config::{ExperimentConfig, OutputFormat, Preset, Sweep, SweepAxis};
pub use output::{emit, read_records, write_records, Record};
pub use run::{aggregate, run_max_ee, run_preset, ResultRow, SummaryRow};
pub use verify::{random_valid_gains, verify_suite, Check};
