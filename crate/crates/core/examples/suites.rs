// SPDX-License-Identifier: Apache-2.0

//! Lists the bundled experiment suites, or runs one.
//!
//! `cargo run --release --example suites -- cube`

use bittide_core::harness::{run_experiment, suite_config, suite_source, Scale, SUITE_NAMES};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let Some(name) = std::env::args().nth(1) else {
        for name in SUITE_NAMES {
            let cfg = suite_config(name, Scale::Desk)?;
            println!(
                "{name}: {} nodes, {} s",
                cfg.sim.topology.n_nodes(),
                cfg.sim.duration
            );
        }
        return Ok(());
    };
    println!("{}", suite_source(&name, Scale::Desk)?);
    let mut cfg = suite_config(&name, Scale::Desk)?;
    cfg.out_dir = std::env::temp_dir().join("bittide").join(&cfg.name);
    let out = run_experiment(&cfg)?;
    println!(
        "within {} ppm from {:?} s, final spread {:?} ppm",
        cfg.band_ppm,
        out.summary.time_to_band(),
        out.summary.final_spread()
    );
    Ok(())
}
