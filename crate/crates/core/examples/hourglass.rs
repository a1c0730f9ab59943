// SPDX-License-Identifier: Apache-2.0

//! Two cliques joined by one bridge: each clique agrees quickly, the two
//! agree with each other much later.

use bittide_core::engine::{convergence_stats, simulate, SimConfig};
use bittide_core::topology::{generate, TopologyKind, DEFAULT_LINK_LATENCY};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let topo = generate(&TopologyKind::Hourglass, DEFAULT_LINK_LATENCY)?;
    let mut cfg = SimConfig::new(topo).realistic();
    cfg.duration = 3.0;
    cfg.cadence = 0.01;
    cfg.seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);

    let tel = simulate(&cfg)?;
    let partition = vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]];
    let stats = convergence_stats(&tel, 1.0, &partition);
    for g in &stats.groups {
        println!("clique {:?}: within 1 ppm from {:?} s", g.nodes, g.time_to_band);
    }
    println!("whole network: within 1 ppm from {:?} s", stats.time_to_band);

    println!("t_s clique_a clique_b between");
    for i in (0..stats.times.len()).step_by(25) {
        println!(
            "{:.2} {:.3} {:.3} {:.3}",
            stats.times[i], stats.groups[0].spread[i], stats.groups[1].spread[i], stats.inter_group_spread[i]
        );
    }
    Ok(())
}
