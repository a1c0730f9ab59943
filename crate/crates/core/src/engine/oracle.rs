// SPDX-License-Identifier: Apache-2.0

//! Frame-by-frame reference simulation.
//!
//! Every node sends one frame per localtick on each outgoing link and pops
//! one frame per localtick from each incoming buffer; frames fly for the
//! link latency and are appended to the receiver's FIFO on arrival. Nothing
//! here uses the floor formula of the hybrid model, which makes it a ground
//! truth for [`simulate`](super::simulate). The controller path is shared.

use std::collections::{BinaryHeap, VecDeque};

use super::config::{Mode, SimConfig};
use super::lane::{build_lanes, ControlEvent, EventKey, Lane, Logs};
use super::telemetry::{
    BufferMode, EventCounts, FrameLedger, LinkInfo, OccupancySample, ReframeRecord, Telemetry,
};
use crate::buffers::{
    ddc_occupancy, reframe, BufferError, DdcOccupancy, DomainCounter, ElasticBuffer,
    ExtendedCounter,
};
use crate::topology::NodeId;
use crate::{Error, Fault, Result};

pub const ORACLE_MAX_NODES: usize = 8;
pub const ORACLE_MAX_DURATION: f64 = 0.05;

const LINK_EVENT: u8 = 0;
const NODE_EVENT: u8 = 1;

struct OracleLink {
    src: usize,
    dst: usize,
    latency: f64,
    lambda: i64,
    mode: BufferMode,
    in_flight: VecDeque<(f64, i64)>,
    buffer: ElasticBuffer,
    fifo: VecDeque<i64>,
    rx: u64,
    tx: u64,
    counters: Option<(DomainCounter, DomainCounter)>,
    last_arrived: i64,
    // Virtual pairing for the DDC phase: the q-th arrival is matched with
    // the q-th pop.
    unmatched_arrivals: VecDeque<i64>,
    unmatched_pops: VecDeque<i64>,
    ledger: FrameLedger,
}

impl OracleLink {
    fn occupancy(&mut self, bits: u32) -> Result<i64, Fault> {
        match self.mode {
            BufferMode::Eb => Ok(self.buffer.occupancy() as i64),
            BufferMode::Ddc => {
                let (rx, tx) = match self.counters.as_mut() {
                    Some((rx_c, tx_c)) => {
                        rx_c.advance_to(self.rx)?;
                        tx_c.advance_to(self.tx)?;
                        (rx_c.extended(), tx_c.extended())
                    }
                    None => (
                        ExtendedCounter::from_count(bits, self.rx),
                        ExtendedCounter::from_count(bits, self.tx),
                    ),
                };
                Ok(ddc_occupancy(rx, tx).value() as i64)
            }
        }
    }

    fn arrive(&mut self, t: f64, depth: usize) -> Result<(), Fault> {
        let (_, send_tick) = self.in_flight.pop_front().expect("scheduled arrival");
        match self.mode {
            BufferMode::Eb => {
                if self.buffer.push() == Err(BufferError::Overflow) {
                    return Err(Fault::Overflow {
                        node: self.dst,
                        src: self.src,
                        t,
                        depth,
                    });
                }
                self.fifo.push_back(send_tick);
            }
            BufferMode::Ddc => {
                self.rx += 1;
                match self.unmatched_pops.pop_front() {
                    Some(recv_tick) => self.ledger.record(send_tick, recv_tick),
                    None => self.unmatched_arrivals.push_back(send_tick),
                }
            }
        }
        self.last_arrived = send_tick;
        Ok(())
    }

    fn pop(&mut self, t: f64, recv_tick: i64) -> Result<(), Fault> {
        match self.mode {
            BufferMode::Eb => {
                if self.buffer.pop() == Err(BufferError::Underflow) {
                    return Err(Fault::Underflow {
                        node: self.dst,
                        src: self.src,
                        t,
                    });
                }
                let send_tick = self.fifo.pop_front().expect("fifo mirrors the buffer");
                self.ledger.record(send_tick, recv_tick);
            }
            BufferMode::Ddc => {
                self.tx += 1;
                match self.unmatched_arrivals.pop_front() {
                    Some(send_tick) => self.ledger.record(send_tick, recv_tick),
                    None => self.unmatched_pops.push_back(recv_tick),
                }
            }
        }
        Ok(())
    }
}

struct Oracle {
    lanes: Vec<Lane>,
    links: Vec<OracleLink>,
    incoming: Vec<Vec<usize>>,
    outgoing: Vec<Vec<usize>>,
    next_tick: Vec<i64>,
    bits: u32,
    depth: usize,
}

impl Oracle {
    fn next_node_event(&self, i: usize) -> f64 {
        let lane = &self.lanes[i];
        let tick = self.next_tick[i] as f64;
        lane.time_of(tick.min(lane.next_control_phase()))
    }
}

/// Runs the closed loop frame by frame. Limited to small networks and short
/// runs since every frame is an event.
pub fn discrete_oracle(cfg: &SimConfig) -> Result<Telemetry> {
    cfg.validate()?;
    let n = cfg.topology.n_nodes();
    if n > ORACLE_MAX_NODES {
        return Err(Error::config(format!(
            "discrete oracle supports at most {ORACLE_MAX_NODES} nodes, got {n}"
        )));
    }
    if cfg.duration > ORACLE_MAX_DURATION {
        return Err(Error::config(format!(
            "discrete oracle supports at most {ORACLE_MAX_DURATION} s, got {}",
            cfg.duration
        )));
    }
    let initial_mode = match cfg.mode {
        Mode::Elastic => BufferMode::Eb,
        Mode::Ddc | Mode::DdcThenReframe => BufferMode::Ddc,
    };
    let beta_off = match initial_mode {
        BufferMode::Eb => cfg.beta_off_eb(),
        BufferMode::Ddc => cfg.controller.beta_off_ddc,
    };
    let lanes = build_lanes(cfg, beta_off)?;
    let eb_init = cfg.buffers.eb_init as i64;

    let mut links = Vec::new();
    for (e, l) in cfg.topology.links().iter().enumerate() {
        let latency = cfg.effective_latency(e);
        let src_lane = &lanes[l.src.0];
        let before_start = src_lane.floor_phase_at(-latency);
        let at_start = src_lane.theta0.floor() as i64;
        // Frames sent during (-l, 0] are still on the wire at the trigger.
        let in_flight = ((before_start + 1)..=at_start)
            .map(|tick| (src_lane.time_of(tick as f64) + latency, tick))
            .collect();
        let (buffer, fifo) = match initial_mode {
            BufferMode::Eb => (
                ElasticBuffer::new(cfg.buffers.depth, cfg.buffers.eb_init)?,
                ((before_start - eb_init + 1)..=before_start).collect(),
            ),
            BufferMode::Ddc => (ElasticBuffer::new(cfg.buffers.depth, 0)?, VecDeque::new()),
        };
        let tx_base = lanes[l.dst.0].theta0.floor() as i64;
        let lambda = match initial_mode {
            BufferMode::Eb => eb_init - before_start + tx_base,
            BufferMode::Ddc => tx_base - before_start,
        };
        let counters = if cfg.buffers.emulate_counters {
            Some((
                DomainCounter::new(cfg.buffers.gray_bits)?,
                DomainCounter::new(cfg.buffers.gray_bits)?,
            ))
        } else {
            None
        };
        links.push(OracleLink {
            src: l.src.0,
            dst: l.dst.0,
            latency,
            lambda,
            mode: initial_mode,
            in_flight,
            buffer,
            fifo,
            rx: 0,
            tx: 0,
            counters,
            last_arrived: before_start,
            unmatched_arrivals: VecDeque::new(),
            unmatched_pops: VecDeque::new(),
            ledger: FrameLedger::default(),
        });
    }
    let next_tick = lanes.iter().map(|l| l.theta0.floor() as i64 + 1).collect();
    let mut sim = Oracle {
        lanes,
        links,
        incoming: (0..n).map(|i| cfg.topology.incoming(NodeId(i))).collect(),
        outgoing: (0..n)
            .map(|i| {
                (0..cfg.topology.links().len())
                    .filter(|&e| cfg.topology.links()[e].src.0 == i)
                    .collect()
            })
            .collect(),
        next_tick,
        bits: cfg.buffers.gray_bits,
        depth: cfg.buffers.depth,
    };

    let max_latency = sim.links.iter().map(|l| l.latency).fold(0.0, f64::max);
    let horizon = max_latency + 4.0 * cfg.controller.period_ticks as f64 / cfg.clock.nominal_hz;
    let guard = cfg.divergence_guard_ppm;
    let mut logs = Logs::for_config(cfg);
    let mut counts = EventCounts::default();
    let mut tel_freq = Vec::new();
    let mut tel_occ = Vec::new();
    let mut reframes = Vec::new();

    let mut heap = BinaryHeap::new();
    for i in 0..n {
        heap.push(EventKey {
            t: sim.next_node_event(i),
            class: NODE_EVENT,
            idx: i as u32,
        });
    }
    for (e, link) in sim.links.iter().enumerate() {
        if let Some(&(t, _)) = link.in_flight.front() {
            heap.push(EventKey {
                t,
                class: LINK_EVENT,
                idx: e as u32,
            });
        }
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
                let eb_params = cfg.params(cfg.beta_off_eb());
                for i in 0..n {
                    let mut before = Vec::new();
                    for &e in &sim.incoming[i] {
                        let link = &mut sim.links[e];
                        let value = link.occupancy(sim.bits)?;
                        before.push(value);
                        let r = reframe(DdcOccupancy(value as i32), cfg.buffers.eb_init, cfg.buffers.depth)?;
                        link.buffer = r.buffer;
                        link.fifo = ((link.last_arrived - eb_init + 1)..=link.last_arrived).collect();
                        link.unmatched_arrivals.clear();
                        link.unmatched_pops.clear();
                        link.mode = BufferMode::Eb;
                        link.lambda += r.lambda_delta;
                        reframes.push(ReframeRecord {
                            t: rf_t,
                            link: e,
                            ddc_value: value as i32,
                            lambda_delta: r.lambda_delta,
                        });
                    }
                    let after = vec![eb_init; before.len()];
                    sim.lanes[i].rebias(&before, &after, eb_params);
                }
                reframe_at = None;
            } else {
                for lane in &sim.lanes {
                    tel_freq.push(lane.freq_sample(sample_t));
                }
                for link in sim.links.iter_mut() {
                    tel_occ.push(OccupancySample {
                        t: sample_t,
                        node: link.dst,
                        src: link.src,
                        frames: link.occupancy(sim.bits)?,
                        mode: link.mode,
                    });
                }
                next_sample += 1;
            }
        }
        if next_t > cfg.duration {
            break;
        }
        let ev = heap.pop().expect("peeked");
        let t = ev.t;
        let idx = ev.idx as usize;
        if ev.class == LINK_EVENT {
            let link = &mut sim.links[idx];
            link.arrive(t, sim.depth)?;
            counts.frames_received += 1;
            if let Some(&(next, _)) = link.in_flight.front() {
                heap.push(EventKey {
                    t: next,
                    class: LINK_EVENT,
                    idx: ev.idx,
                });
            }
            continue;
        }

        let i = idx;
        let tick = sim.next_tick[i];
        if (tick as f64) <= sim.lanes[i].next_control_phase() {
            for k in 0..sim.outgoing[i].len() {
                let e = sim.outgoing[i][k];
                let link = &mut sim.links[e];
                let arrival = t + link.latency;
                if link.in_flight.is_empty() {
                    heap.push(EventKey {
                        t: arrival,
                        class: LINK_EVENT,
                        idx: e as u32,
                    });
                }
                link.in_flight.push_back((arrival, tick));
                counts.frames_sent += 1;
            }
            for k in 0..sim.incoming[i].len() {
                let e = sim.incoming[i][k];
                sim.links[e].pop(t, tick)?;
            }
            sim.next_tick[i] += 1;
        } else {
            match sim.lanes[i].take_control_event() {
                ControlEvent::Measure { k, phase } => {
                    occ.clear();
                    for j in 0..sim.incoming[i].len() {
                        let e = sim.incoming[i][j];
                        occ.push(sim.links[e].occupancy(sim.bits)?);
                    }
                    sim.lanes[i].control(t, k, phase, &occ, guard, &mut logs)?;
                }
                ControlEvent::Actuate { direction } => {
                    sim.lanes[i].actuate(t, direction, guard, &mut logs)?;
                }
            }
            let lane = &mut sim.lanes[i];
            if lane.history.len() > 32 {
                lane.history.prune_before(t - horizon);
            }
        }
        heap.push(EventKey {
            t: sim.next_node_event(i),
            class: NODE_EVENT,
            idx: ev.idx,
        });
    }

    for lane in &sim.lanes {
        counts.measurements += lane.measurements;
        counts.pulses += lane.pulses;
        counts.suppressed_pulses += lane.suppressed;
    }
    Ok(Telemetry {
        n_nodes: n,
        step_ppm: cfg.clock.step_ppm,
        freq: tel_freq,
        occupancy: tel_occ,
        links: sim
            .links
            .iter()
            .map(|l| LinkInfo {
                src: l.src,
                dst: l.dst,
                latency: l.latency,
                lambda: l.lambda,
            })
            .collect(),
        min_pulse_gap: sim.lanes.iter().map(|l| l.min_gap).collect(),
        ledger: sim.links.into_iter().map(|l| l.ledger).collect(),
        measurements: logs.measurements.unwrap_or_default(),
        pulses: logs.pulses.unwrap_or_default(),
        reframes,
        counts,
    })
}
