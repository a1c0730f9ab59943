// SPDX-License-Identifier: Apache-2.0

//! Checks the closed-form buffer model against the frame-by-frame
//! simulator on a short run of a small network.

use bittide_core::engine::{discrete_oracle, simulate, Mode, SimConfig};
use bittide_core::topology::{generate, TopologyKind, DEFAULT_LINK_LATENCY};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for mode in [Mode::Ddc, Mode::Elastic] {
        let topo = generate(&TopologyKind::Complete { n: 4 }, DEFAULT_LINK_LATENCY)?;
        let mut cfg = SimConfig::new(topo).realistic();
        cfg.mode = mode;
        cfg.clock.offset_bound_ppm = 1.0;
        cfg.duration = 0.005;
        cfg.cadence = 1e-4;
        cfg.record_measurements = true;

        let model = simulate(&cfg)?;
        let oracle = discrete_oracle(&cfg)?;
        let agree = model
            .measurements
            .iter()
            .zip(&oracle.measurements)
            .filter(|(a, b)| a == b)
            .count();
        println!(
            "{mode}: {agree}/{} controller samples identical, occupancy traces {}, {} frames sent",
            model.measurements.len(),
            if model.occupancy == oracle.occupancy { "equal" } else { "differ" },
            oracle.counts.frames_sent
        );
    }
    Ok(())
}
