// SPDX-License-Identifier: Apache-2.0

//! A complete graph of eight where the direction 0 -> 2 runs over 2 km of
//! fiber. Buffers are recentered onto real elastic buffers at 0.4 s. The
//! round trip 0-2 grows by the fiber's flight time in frames; every other
//! round trip stays a few dozen frames.

use bittide_core::engine::{
    in_flight_estimate, rtt_logical_latency, simulate, BufferMode, Mode, SimConfig,
};
use bittide_core::topology::{
    fiber_latency, generate, NodeId, TopologyKind, DEFAULT_LINK_LATENCY, FIBER_SPEED_MPS,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut topo = generate(&TopologyKind::Complete { n: 8 }, DEFAULT_LINK_LATENCY)?;
    topo.set_link_latency(NodeId(0), NodeId(2), fiber_latency(2000.0, FIBER_SPEED_MPS))?;

    let mut cfg = SimConfig::new(topo).realistic();
    cfg.mode = Mode::DdcThenReframe;
    cfg.reframe_at = Some(0.4);
    cfg.duration = 0.6;
    cfg.cadence = 0.01;
    cfg.seed = 2;
    let tel = simulate(&cfg)?;

    println!("pair rtt_frames");
    for i in 0..8 {
        for j in (i + 1)..8 {
            println!("{i}-{j} {}", rtt_logical_latency(&tel, i, j)?);
        }
    }
    let short = rtt_logical_latency(&tel, 0, 1)?;
    let long = rtt_logical_latency(&tel, 0, 2)?;
    println!("increase over the fiber: {}", long - short);
    let flight = (fiber_latency(2000.0, FIBER_SPEED_MPS) * cfg.clock.nominal_hz).round();
    let est = in_flight_estimate(long, cfg.buffers.eb_init as f64, flight)?;
    println!("pipeline per side after removing buffers and {flight} frames of flight: {}", est.per_side);

    let eb: Vec<i64> = tel.occupancy.iter().filter(|o| o.mode == BufferMode::Eb).map(|o| o.frames).collect();
    println!(
        "{} reframes, elastic occupancy {}..{}",
        tel.reframes.len(),
        eb.iter().min().unwrap_or(&0),
        eb.iter().max().unwrap_or(&0)
    );
    Ok(())
}
