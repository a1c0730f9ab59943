// SPDX-License-Identifier: Apache-2.0

//! The 3-cube: prints its links, then the frequencies and one buffer trace.

use bittide_core::engine::{simulate, SimConfig};
use bittide_core::topology::{generate, NodeId, TopologyKind, DEFAULT_LINK_LATENCY};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let topo = generate(&TopologyKind::Cube, DEFAULT_LINK_LATENCY)?;
    for i in 0..topo.n_nodes() {
        let peers: Vec<usize> = topo.peers(NodeId(i)).iter().map(|p| p.0).collect();
        println!("node {i} <-> {peers:?}");
    }

    let mut cfg = SimConfig::new(topo).realistic();
    cfg.duration = 1.0;
    cfg.cadence = 0.05;
    let tel = simulate(&cfg)?;

    for samples in tel.freq_by_time() {
        let f: Vec<String> = samples.iter().map(|s| format!("{:+.2}", s.freq_offset_ppm)).collect();
        println!("{:.2} {}", samples[0].t, f.join(" "));
    }
    let trace: Vec<i64> = tel.occupancy_trace(0, 1).iter().map(|&(_, v)| v).collect();
    println!("buffer 1 -> 0: {trace:?}");
    Ok(())
}
