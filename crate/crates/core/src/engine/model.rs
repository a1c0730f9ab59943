// SPDX-License-Identifier: Apache-2.0

//! Exact event-driven simulation of the abstract frame model.
//!
//! Each node alternates measurement events at phases `θ⁰ + k p` and
//! actuation events `d` localticks later. Because frequencies are piecewise
//! constant, phases are evaluated in closed form and buffer occupancies come
//! straight from
//!
//! ```text
//! β_{j→i}(t) = ⌊θ_j(t − l_{j→i})⌋ − ⌊θ_i(t)⌋ + λ_{j→i}
//! ```
//!
//! so there is no integration error anywhere in the loop.

use std::collections::BinaryHeap;

use super::config::{Mode, SimConfig};
use super::lane::{build_lanes, ControlEvent, EventKey, Lane, Logs};
use super::latency::buffer_occupancy_model;
use super::telemetry::{
    BufferMode, EventCounts, LinkInfo, OccupancySample, ReframeRecord, Telemetry,
};
use crate::buffers::{ddc_occupancy, reframe, DdcOccupancy, DomainCounter, ExtendedCounter};
use crate::topology::NodeId;
use crate::{Fault, Result};

struct ModelLink {
    src: usize,
    dst: usize,
    latency: f64,
    lambda: i64,
    mode: BufferMode,
    /// ⌊θ_src(−l)⌋: frames sent before this are not counted by the rx DDC.
    rx_base: i64,
    /// ⌊θ_dst(0)⌋.
    tx_base: i64,
    counters: Option<(DomainCounter, DomainCounter)>,
}

struct Model {
    lanes: Vec<Lane>,
    links: Vec<ModelLink>,
    incoming: Vec<Vec<usize>>,
    depth: usize,
    bits: u32,
}

impl Model {
    fn occupancy(&mut self, e: usize, t: f64, own_floor: i64) -> Result<i64, Fault> {
        let link = &mut self.links[e];
        let src_floor = self.lanes[link.src].floor_phase_at(t - link.latency);
        match link.mode {
            BufferMode::Eb => {
                let beta = src_floor - own_floor + link.lambda;
                if beta > self.depth as i64 {
                    return Err(Fault::Overflow {
                        node: link.dst,
                        src: link.src,
                        t,
                        depth: self.depth,
                    });
                }
                if beta < 0 {
                    return Err(Fault::Underflow {
                        node: link.dst,
                        src: link.src,
                        t,
                    });
                }
                Ok(beta)
            }
            BufferMode::Ddc => {
                let rx = (src_floor - link.rx_base) as u64;
                let tx = (own_floor - link.tx_base) as u64;
                let (rx, tx) = match link.counters.as_mut() {
                    Some((rx_c, tx_c)) => {
                        rx_c.advance_to(rx)?;
                        tx_c.advance_to(tx)?;
                        (rx_c.extended(), tx_c.extended())
                    }
                    None => (
                        ExtendedCounter::from_count(self.bits, rx),
                        ExtendedCounter::from_count(self.bits, tx),
                    ),
                };
                let value = ddc_occupancy(rx, tx).value() as i64;
                debug_assert_eq!(value, src_floor - own_floor + link.lambda);
                Ok(value)
            }
        }
    }
}

/// Runs the closed-loop network with the exact hybrid model.
pub fn simulate(cfg: &SimConfig) -> Result<Telemetry> {
    cfg.validate()?;
    let n = cfg.topology.n_nodes();
    let initial_mode = match cfg.mode {
        Mode::Elastic => BufferMode::Eb,
        Mode::Ddc | Mode::DdcThenReframe => BufferMode::Ddc,
    };
    let beta_off = match initial_mode {
        BufferMode::Eb => cfg.beta_off_eb(),
        BufferMode::Ddc => cfg.controller.beta_off_ddc,
    };
    let lanes = build_lanes(cfg, beta_off)?;
    let mut links = Vec::with_capacity(cfg.topology.links().len());
    for (e, l) in cfg.topology.links().iter().enumerate() {
        let latency = cfg.effective_latency(e);
        let rx_base = lanes[l.src.0].floor_phase_at(-latency);
        let tx_base = lanes[l.dst.0].theta0.floor() as i64;
        let lambda = match initial_mode {
            BufferMode::Eb => cfg.buffers.eb_init as i64 - rx_base + tx_base,
            BufferMode::Ddc => tx_base - rx_base,
        };
        let counters = if cfg.buffers.emulate_counters {
            Some((
                DomainCounter::new(cfg.buffers.gray_bits)?,
                DomainCounter::new(cfg.buffers.gray_bits)?,
            ))
        } else {
            None
        };
        links.push(ModelLink {
            src: l.src.0,
            dst: l.dst.0,
            latency,
            lambda,
            mode: initial_mode,
            rx_base,
            tx_base,
            counters,
        });
    }
    let incoming = (0..n).map(|i| cfg.topology.incoming(NodeId(i))).collect();
    let mut model = Model {
        lanes,
        links,
        incoming,
        depth: cfg.buffers.depth,
        bits: cfg.buffers.gray_bits,
    };

    let max_latency = model.links.iter().map(|l| l.latency).fold(0.0, f64::max);
    let horizon = max_latency + 4.0 * cfg.controller.period_ticks as f64 / cfg.clock.nominal_hz;
    let guard = cfg.divergence_guard_ppm;
    let mut logs = Logs::for_config(cfg);
    let mut tel = Telemetry {
        n_nodes: n,
        step_ppm: cfg.clock.step_ppm,
        freq: Vec::new(),
        occupancy: Vec::new(),
        links: Vec::new(),
        ledger: Vec::new(),
        measurements: Vec::new(),
        pulses: Vec::new(),
        reframes: Vec::new(),
        counts: EventCounts::default(),
        min_pulse_gap: Vec::new(),
    };

    let mut heap = BinaryHeap::with_capacity(n);
    for lane in &model.lanes {
        heap.push(EventKey {
            t: lane.time_of(lane.next_control_phase()),
            class: 1,
            idx: lane.node as u32,
        });
    }

    let n_samples = cfg.sample_count();
    let mut next_sample = 0usize;
    let mut reframe_at = cfg.reframe_at.filter(|_| cfg.mode == Mode::DdcThenReframe);
    let mut occ = Vec::new();

    loop {
        let next_t = heap.peek().map_or(f64::INFINITY, |ev| ev.t);
        loop {
            let sample_t = if next_sample < n_samples {
                next_sample as f64 * cfg.cadence
            } else {
                f64::INFINITY
            };
            let rf_t = reframe_at.unwrap_or(f64::INFINITY);
            let g = sample_t.min(rf_t);
            if g > next_t || g > cfg.duration || !g.is_finite() {
                break;
            }
            if rf_t <= sample_t {
                do_reframe(&mut model, cfg, rf_t, &mut tel)?;
                reframe_at = None;
            } else {
                sample(&mut model, sample_t, &mut tel)?;
                next_sample += 1;
            }
        }
        if next_t > cfg.duration {
            break;
        }
        let ev = heap.pop().expect("peeked");
        let i = ev.idx as usize;
        let t = ev.t;
        match model.lanes[i].take_control_event() {
            ControlEvent::Measure { k, phase } => {
                let own_floor = phase.floor() as i64;
                occ.clear();
                for idx in 0..model.incoming[i].len() {
                    let e = model.incoming[i][idx];
                    occ.push(model.occupancy(e, t, own_floor)?);
                }
                model.lanes[i].control(t, k, phase, &occ, guard, &mut logs)?;
            }
            ControlEvent::Actuate { direction } => {
                model.lanes[i].actuate(t, direction, guard, &mut logs)?;
            }
        }
        let lane = &mut model.lanes[i];
        if lane.history.len() > 32 {
            lane.history.prune_before(t - horizon);
        }
        heap.push(EventKey {
            t: lane.time_of(lane.next_control_phase()),
            class: 1,
            idx: ev.idx,
        });
    }

    tel.links = model
        .links
        .iter()
        .map(|l| LinkInfo {
            src: l.src,
            dst: l.dst,
            latency: l.latency,
            lambda: l.lambda,
        })
        .collect();
    for lane in &model.lanes {
        tel.counts.measurements += lane.measurements;
        tel.counts.pulses += lane.pulses;
        tel.counts.suppressed_pulses += lane.suppressed;
        tel.min_pulse_gap.push(lane.min_gap);
    }
    tel.measurements = logs.measurements.unwrap_or_default();
    tel.pulses = logs.pulses.unwrap_or_default();
    Ok(tel)
}

fn sample(model: &mut Model, t: f64, tel: &mut Telemetry) -> Result<(), Fault> {
    for lane in &model.lanes {
        tel.freq.push(lane.freq_sample(t));
    }
    for e in 0..model.links.len() {
        let (src, dst, latency, lambda, mode) = {
            let l = &model.links[e];
            (l.src, l.dst, l.latency, l.lambda, l.mode)
        };
        let frames = match mode {
            BufferMode::Eb => buffer_occupancy_model(
                &model.lanes[src].history,
                &model.lanes[dst].history,
                latency,
                lambda,
                t,
            )
            .map_err(|err| Fault::ModelInconsistency(err.to_string()))?,
            BufferMode::Ddc => {
                let own_floor = model.lanes[dst].floor_phase_at(t);
                model.occupancy(e, t, own_floor)?
            }
        };
        tel.occupancy.push(OccupancySample {
            t,
            node: dst,
            src,
            frames,
            mode,
        });
    }
    Ok(())
}

fn do_reframe(model: &mut Model, cfg: &SimConfig, t: f64, tel: &mut Telemetry) -> Result<()> {
    let eb_params = cfg.params(cfg.beta_off_eb());
    for i in 0..model.lanes.len() {
        let own_floor = model.lanes[i].floor_phase_at(t);
        let mut before = Vec::new();
        for idx in 0..model.incoming[i].len() {
            let e = model.incoming[i][idx];
            let value = model.occupancy(e, t, own_floor)?;
            before.push(value);
            let r = reframe(
                DdcOccupancy(value as i32),
                cfg.buffers.eb_init,
                cfg.buffers.depth,
            )?;
            let link = &mut model.links[e];
            link.lambda += r.lambda_delta;
            link.mode = BufferMode::Eb;
            tel.reframes.push(ReframeRecord {
                t,
                link: e,
                ddc_value: value as i32,
                lambda_delta: r.lambda_delta,
            });
        }
        let after = vec![cfg.buffers.eb_init as i64; before.len()];
        model.lanes[i].rebias(&before, &after, eb_params);
    }
    Ok(())
}
