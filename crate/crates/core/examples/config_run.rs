// SPDX-License-Identifier: Apache-2.0

//! Runs an experiment config and writes its artifacts.
//!
//! `cargo run --release --example config_run [file.cfg] [out_dir]`
//!
//! Without a file a small built-in config is used.

use std::path::PathBuf;

use bittide_core::harness::{run_experiment, ExperimentConfig};

const BUILTIN: &str = "\
name = demo
seed = 3
duration = 0.3
telemetry.cadence = 0.01
topology.kind = complete
topology.n = 4
link = 0 1 500m
clock.step_ppm = 0.1
controller.kp = 25
output.svg = true
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let mut cfg = match args.next() {
        Some(path) => ExperimentConfig::from_file(path.as_ref())?,
        None => BUILTIN.parse()?,
    };
    cfg.out_dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("bittide").join(&cfg.name));

    let out = run_experiment(&cfg)?;
    print!("{}", out.summary.render(&cfg));
    println!("artifacts in {}", cfg.out_dir.display());
    Ok(())
}
