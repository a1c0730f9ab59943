// SPDX-License-Identifier: Apache-2.0

//! Experiment harness: config files, bundled suites, artifacts and run
//! comparison.

pub mod artifacts;
mod compare;
mod config;
mod run;
mod suite;

pub use compare::{
    c_est_traces, compare_runs, compare_traces, offset_traces, CompareReport, NodeDiff, Traces,
};
pub use config::{parse_latency, ExperimentConfig};
pub use run::{run_experiment, write_artifacts, RunOutput, RunSummary};
pub use suite::{suite_config, suite_source, Scale, SUITE_NAMES};
