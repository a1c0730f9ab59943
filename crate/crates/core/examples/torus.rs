// SPDX-License-Identifier: Apache-2.0

//! A 3-D torus, 4x4x4 unless dimensions are given.
//!
//! `cargo run --release --example torus -- 6 6 6`

use std::time::Instant;

use bittide_core::engine::{convergence_stats, simulate, SimConfig};
use bittide_core::topology::{generate, TopologyKind, DEFAULT_LINK_LATENCY};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut dims: Vec<usize> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    if dims.is_empty() {
        dims = vec![4, 4, 4];
    }
    let topo = generate(&TopologyKind::Torus { dims }, DEFAULT_LINK_LATENCY)?;
    println!("{} nodes, {} directed links", topo.n_nodes(), topo.links().len());

    let mut cfg = SimConfig::new(topo).realistic();
    // fewer, larger corrections keep big networks cheap to simulate
    cfg.controller.kp = 50.0;
    cfg.controller.period_ticks = 1250;
    cfg.duration = 1.0;
    cfg.cadence = 0.02;

    let start = Instant::now();
    let tel = simulate(&cfg)?;
    let stats = convergence_stats(&tel, 1.0, &[]);
    println!(
        "spread {:.2} -> {:.3} ppm, within 1 ppm from {:?} s, {:.1} s wall clock",
        stats.spread[0],
        stats.final_spread,
        stats.time_to_band,
        start.elapsed().as_secs_f64()
    );
    println!("{:?}", tel.counts);
    Ok(())
}
