//! Run, sweep and verify: the logic behind the command-line front end.

mod config;
mod run;
mod sweep;
mod verify;

pub use config::{parse_run_config, Placement, RunConfig, MAX_TRIALS};
pub use run::{
    aggregate, cmd_run, expectation, report_csv, report_json, run_trial, transcript_file_name,
    Aggregate, Expectation, PerCheck, RunOptions, RunReport, TrialSummary, REPORT_SCHEMA_VERSION,
};
pub use sweep::{
    cmd_sweep, eve_label, grid, parse_sweep_spec, sweep_csv, sweep_json, RowStatus, SweepRow,
    SweepSpec, MAX_GRID_POINTS,
};
pub use verify::{cmd_verify, PropertyResult, VerifyOptions};
