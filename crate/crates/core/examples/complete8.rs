// SPDX-License-Identifier: Apache-2.0

//! Eight fully connected nodes converging from random oscillator offsets.
//!
//! `cargo run --release --example complete8 [seed] [--slow]`
//!
//! With `--slow` the run uses the small gain and 0.01 ppm steps and takes
//! about ten simulated seconds to settle.

use bittide_core::engine::{convergence_stats, simulate, SimConfig};
use bittide_core::topology::{generate, TopologyKind, DEFAULT_LINK_LATENCY};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let slow = args.iter().any(|a| a == "--slow");
    let seed = args.iter().find_map(|a| a.parse().ok()).unwrap_or(1);

    let topo = generate(&TopologyKind::Complete { n: 8 }, DEFAULT_LINK_LATENCY)?;
    let mut cfg = SimConfig::new(topo);
    if slow {
        cfg.duration = 12.0;
        cfg.cadence = 0.1;
    } else {
        cfg = cfg.realistic();
        cfg.duration = 0.5;
        cfg.cadence = 0.01;
    }
    cfg.seed = seed;

    let tel = simulate(&cfg)?;
    let stats = convergence_stats(&tel, 2.0 * cfg.clock.step_ppm, &[]);
    println!("t_s spread_ppm");
    let every = (stats.times.len() / 20).max(1);
    for (t, s) in stats.times.iter().zip(&stats.spread).step_by(every) {
        println!("{t:.3} {s:.3}");
    }
    match stats.time_to_band {
        Some(t) => println!("within {} ppm from {t:.3} s", stats.band_ppm),
        None => println!("not within {} ppm by {} s", stats.band_ppm, cfg.duration),
    }
    println!("{:?}", tel.counts);
    Ok(())
}
