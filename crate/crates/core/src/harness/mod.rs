//! Configuration, persistence and the scripted experiments.
//!
//! Every scenario takes an [`ExperimentConfig`] and an output directory and
//! writes tidy CSV/JSON files there. Runs are reproducible from the config
//! and its seed.

mod closed_loop;
mod compare;
mod config;
mod exceedance;
mod impulse;
mod insert;
mod pipeline;
mod rate_statics;

pub use compare::{cell_label, compare_grid, run_compare, CellStatus, CompareCell, CompareConfig, CompareReport};
pub use config::{ExperimentConfig, PathsConfig};
pub use exceedance::ExceedanceHistogram;
pub use impulse::{impulse_direction, impulse_trials, run_impulse, ImpulseConfig, ImpulseReport, ImpulseTrial};
pub use insert::{insert_runs, run_insert, InsertSample, InsertConfig, InsertReport, InsertRun};
pub use pipeline::{
    controller_for, load_checkpoint, load_dataset, run_calibrate, run_collect, run_eval, run_train, EvalReport,
};
pub use rate_statics::{rate_statics_traces, run_rate_statics, RateTrace, RateStaticsConfig, RateStaticsReport};
