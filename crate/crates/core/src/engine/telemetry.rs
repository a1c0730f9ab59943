// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::clock::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqSample {
    pub t: f64,
    pub node: usize,
    pub freq_offset_ppm: f64,
    pub c_est_ppm: f64,
    pub net_steps: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BufferMode {
    Ddc,
    Eb,
}

impl fmt::Display for BufferMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BufferMode::Ddc => "ddc",
            BufferMode::Eb => "eb",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupancySample {
    pub t: f64,
    pub node: usize,
    pub src: usize,
    pub frames: i64,
    pub mode: BufferMode,
}

/// Final bookkeeping for one directed link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkInfo {
    pub src: usize,
    pub dst: usize,
    /// Physical latency plus transceiver pipeline, in seconds.
    pub latency: f64,
    pub lambda: i64,
}

/// A run of consecutive frames on one link sharing a logical latency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatencyRun {
    pub lambda: i64,
    pub first_send_tick: i64,
    pub frames: u64,
}

/// Run-length encoded `(send_tick, recv_tick)` ledger of one link.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrameLedger {
    pub runs: Vec<LatencyRun>,
}

impl FrameLedger {
    pub fn record(&mut self, send_tick: i64, recv_tick: i64) {
        let lambda = recv_tick - send_tick;
        if let Some(last) = self.runs.last_mut() {
            if last.lambda == lambda && last.first_send_tick + last.frames as i64 == send_tick {
                last.frames += 1;
                return;
            }
        }
        self.runs.push(LatencyRun {
            lambda,
            first_send_tick: send_tick,
            frames: 1,
        });
    }

    pub fn frames(&self) -> u64 {
        self.runs.iter().map(|r| r.frames).sum()
    }

    /// Distinct logical latencies in order of first appearance.
    pub fn lambdas(&self) -> Vec<i64> {
        let mut out: Vec<i64> = Vec::new();
        for r in &self.runs {
            if !out.contains(&r.lambda) {
                out.push(r.lambda);
            }
        }
        out
    }

    pub fn last_lambda(&self) -> Option<i64> {
        self.runs.last().map(|r| r.lambda)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub t: f64,
    pub node: usize,
    pub k: u64,
    /// Occupancies of the node's incoming links, in link order.
    pub occupancies: Vec<i64>,
    pub c_rel_ppm: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseRecord {
    pub t: f64,
    pub node: usize,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReframeRecord {
    pub t: f64,
    pub link: usize,
    pub ddc_value: i32,
    pub lambda_delta: i64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EventCounts {
    pub measurements: u64,
    pub pulses: u64,
    /// Pulses dropped because they would have followed the previous one
    /// sooner than the board allows.
    pub suppressed_pulses: u64,
    pub frames_sent: u64,
    pub frames_received: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Telemetry {
    pub n_nodes: usize,
    pub step_ppm: f64,
    pub freq: Vec<FreqSample>,
    pub occupancy: Vec<OccupancySample>,
    pub links: Vec<LinkInfo>,
    /// Per-link frame ledgers; empty unless produced by the discrete oracle.
    pub ledger: Vec<FrameLedger>,
    pub measurements: Vec<MeasurementRecord>,
    pub pulses: Vec<PulseRecord>,
    pub reframes: Vec<ReframeRecord>,
    pub counts: EventCounts,
    /// Smallest spacing between two pulses at each node (infinite if fewer
    /// than two pulses).
    pub min_pulse_gap: Vec<f64>,
}

impl Telemetry {
    /// Frequency samples grouped by sample time.
    pub fn freq_by_time(&self) -> impl Iterator<Item = &[FreqSample]> {
        self.freq.chunks(self.n_nodes.max(1))
    }

    pub fn sample_times(&self) -> Vec<f64> {
        self.freq_by_time().map(|c| c[0].t).collect()
    }

    /// Occupancy trace of the link `src -> node`.
    pub fn occupancy_trace(&self, node: usize, src: usize) -> Vec<(f64, i64)> {
        self.occupancy
            .iter()
            .filter(|s| s.node == node && s.src == src)
            .map(|s| (s.t, s.frames))
            .collect()
    }

    /// Frequency trace of one node.
    pub fn freq_trace(&self, node: usize) -> Vec<(f64, f64)> {
        self.freq
            .iter()
            .filter(|s| s.node == node)
            .map(|s| (s.t, s.freq_offset_ppm))
            .collect()
    }
}
