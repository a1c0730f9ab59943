// SPDX-License-Identifier: Apache-2.0

//! Logical latency bookkeeping.

use super::telemetry::Telemetry;
use crate::clock::PhaseHistory;
use crate::{Error, Fault, Result};

/// `⌊θ_j(t − l)⌋ − ⌊θ_i(t)⌋ + λ`: occupancy of the buffer `j → i` at time
/// `t`. Fails if either history has been pruned past the query.
pub fn buffer_occupancy_model(
    src: &PhaseHistory,
    dst: &PhaseHistory,
    latency: f64,
    lambda: i64,
    t: f64,
) -> Result<i64> {
    let sent = src.phase_at(t - latency)?.floor() as i64;
    let popped = dst.phase_at(t)?.floor() as i64;
    Ok(sent - popped + lambda)
}

fn link_lambda(tel: &Telemetry, src: usize, dst: usize) -> Result<i64> {
    let e = tel
        .links
        .iter()
        .position(|l| l.src == src && l.dst == dst)
        .ok_or_else(|| Error::query(format!("no link {src} -> {dst}")))?;
    Ok(tel
        .ledger
        .get(e)
        .and_then(|l| l.last_lambda())
        .unwrap_or(tel.links[e].lambda))
}

/// Round-trip logical latency `λ_{i→j} + λ_{j→i}`.
pub fn rtt_logical_latency(tel: &Telemetry, i: usize, j: usize) -> Result<i64> {
    Ok(link_lambda(tel, i, j)? + link_lambda(tel, j, i)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineEstimate {
    /// Frames held in both transceiver pipelines together.
    pub total: f64,
    pub per_side: f64,
}

/// What remains of a round trip after removing both elastic buffers and the
/// frames in flight on the wire.
pub fn in_flight_estimate(rtt: i64, eb_frames_per_side: f64, flight_frames: f64) -> Result<PipelineEstimate, Fault> {
    let total = rtt as f64 - 2.0 * eb_frames_per_side - flight_frames;
    if total < 0.0 {
        return Err(Fault::ModelInconsistency(format!(
            "round trip {rtt} is shorter than two {eb_frames_per_side}-frame buffers plus {flight_frames} frames of flight"
        )));
    }
    Ok(PipelineEstimate {
        total,
        per_side: total / 2.0,
    })
}
