// SPDX-License-Identifier: Apache-2.0

//! Per-node clock and controller state shared by the model and the oracle.

use std::cmp::Ordering;
use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::SimConfig;
use super::telemetry::{FreqSample, MeasurementRecord, PulseRecord};
use crate::clock::{self, Actuator, Direction, Oscillator, PhaseHistory};
use crate::controller::{decide, relative_correction, ControllerParams, ControllerState};
use crate::{Fault, Result};

pub(crate) struct Lane {
    pub node: usize,
    pub osc: Oscillator,
    pub act: Actuator,
    pub history: PhaseHistory,
    pub ctrl: ControllerState,
    pub theta0: f64,
    pub next_k: u64,
    pub period: u64,
    pub delay: u64,
    /// Decisions waiting for their actuation phase.
    pub pending: VecDeque<(f64, Direction)>,
    pub params: ControllerParams,
    /// Added to the proportional term; set when buffers are recentered.
    pub bias_ppm: f64,
    pub min_gap: f64,
    pub pulses: u64,
    pub suppressed: u64,
    pub measurements: u64,
}

pub(crate) enum ControlEvent {
    Measure { k: u64, phase: f64 },
    Actuate { direction: Direction },
}

impl Lane {
    pub fn measure_phase(&self) -> f64 {
        self.theta0 + (self.next_k * self.period) as f64
    }

    /// Phase of this lane's next measurement or actuation.
    pub fn next_control_phase(&self) -> f64 {
        let m = self.measure_phase();
        match self.pending.front() {
            Some(&(a, _)) if a <= m => a,
            _ => m,
        }
    }

    pub fn time_of(&self, phase: f64) -> f64 {
        self.history
            .time_of_localtick(phase)
            .expect("control phases lie after the history origin")
    }

    /// Pops whichever control event is due next.
    pub fn take_control_event(&mut self) -> ControlEvent {
        let m = self.measure_phase();
        match self.pending.front() {
            Some(&(a, _)) if a <= m => {
                let (_, direction) = self.pending.pop_front().unwrap();
                ControlEvent::Actuate { direction }
            }
            _ => {
                let k = self.next_k;
                self.next_k += 1;
                ControlEvent::Measure { k, phase: m }
            }
        }
    }

    /// Runs the controller on a fresh set of occupancies and either applies
    /// the decision now or queues it `delay` localticks later.
    pub fn control(
        &mut self,
        t: f64,
        k: u64,
        phase: f64,
        occupancies: &[i64],
        guard_ppm: f64,
        log: &mut Logs,
    ) -> Result<(), Fault> {
        self.measurements += 1;
        let c_rel = relative_correction(occupancies, &self.params) + self.bias_ppm;
        self.ctrl.last_c_rel_ppm = c_rel;
        let direction = decide(c_rel, &self.ctrl);
        if let Some(records) = log.measurements.as_mut() {
            records.push(MeasurementRecord {
                t,
                node: self.node,
                k,
                occupancies: occupancies.to_vec(),
                c_rel_ppm: c_rel,
                direction,
            });
        }
        if self.delay == 0 {
            self.actuate(t, direction, guard_ppm, log)
        } else {
            self.pending.push_back((phase + self.delay as f64, direction));
            Ok(())
        }
    }

    pub fn actuate(&mut self, t: f64, direction: Direction, guard_ppm: f64, log: &mut Logs) -> Result<(), Fault> {
        if direction == Direction::Hold {
            return Ok(());
        }
        if !self.act.can_pulse(t) {
            self.suppressed += 1;
            return Ok(());
        }
        if let Some(last) = self.act.last_pulse() {
            self.min_gap = self.min_gap.min(t - last);
        }
        self.act.apply_pulse(direction, t)?;
        self.ctrl = self.ctrl.commit(direction, self.act.step_size_ppm);
        self.pulses += 1;
        if let Some(pulses) = log.pulses.as_mut() {
            pulses.push(PulseRecord {
                t,
                node: self.node,
                direction,
            });
        }
        let ppm = clock::frequency_offset_ppm(&self.osc, &self.act);
        if ppm.abs() > guard_ppm {
            return Err(Fault::Divergence {
                node: self.node,
                ppm,
                t,
                guard: guard_ppm,
            });
        }
        self.history
            .push_segment(t, clock::effective_frequency(&self.osc, &self.act))
            .map_err(|e| Fault::ModelInconsistency(e.to_string()))
    }

    /// Keeps the demanded correction continuous across a change of buffer
    /// semantics: `before` and `after` are the occupancy sets seen just
    /// before and just after the switch.
    pub fn rebias(&mut self, before: &[i64], after: &[i64], new_params: ControllerParams) {
        let demanded = relative_correction(before, &self.params) + self.bias_ppm;
        self.params = new_params;
        self.bias_ppm = demanded - relative_correction(after, &self.params);
    }

    pub fn freq_sample(&self, t: f64) -> FreqSample {
        FreqSample {
            t,
            node: self.node,
            freq_offset_ppm: clock::frequency_offset_ppm(&self.osc, &self.act),
            c_est_ppm: self.ctrl.c_est_ppm(),
            net_steps: self.act.net_steps(),
        }
    }

    pub fn floor_phase_at(&self, t: f64) -> i64 {
        self.history
            .phase_at(t)
            .expect("queries stay within the retained history")
            .floor() as i64
    }
}

/// Optional per-event logs.
#[derive(Default)]
pub(crate) struct Logs {
    pub measurements: Option<Vec<MeasurementRecord>>,
    pub pulses: Option<Vec<PulseRecord>>,
}

impl Logs {
    pub fn for_config(cfg: &SimConfig) -> Self {
        Logs {
            measurements: cfg.record_measurements.then(Vec::new),
            pulses: cfg.record_pulses.then(Vec::new),
        }
    }
}

/// Builds the node lanes with seeded offsets and initial phases. Phase
/// histories reach back far enough to cover frames already in flight at
/// the start trigger.
pub(crate) fn build_lanes(cfg: &SimConfig, initial_beta_off: f64) -> Result<Vec<Lane>> {
    let n = cfg.topology.n_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bound = cfg.clock.offset_bound_ppm;
    let offsets: Vec<f64> = match &cfg.clock.offsets_ppm {
        Some(o) => o.clone(),
        None => (0..n)
            .map(|_| if bound > 0.0 { rng.gen_range(-bound..=bound) } else { 0.0 })
            .collect(),
    };
    let phases: Vec<f64> = match &cfg.clock.initial_phases {
        Some(p) => p.clone(),
        None => (0..n)
            .map(|_| {
                let frac: f64 = rng.gen();
                let whole = if cfg.clock.phase_spread_ticks > 0 {
                    rng.gen_range(0..cfg.clock.phase_spread_ticks)
                } else {
                    0
                };
                whole as f64 + frac
            })
            .collect(),
    };
    let max_latency = (0..cfg.topology.links().len())
        .map(|e| cfg.effective_latency(e))
        .fold(0.0, f64::max);
    let origin = -(max_latency + 1e-6);
    let params = cfg.params(initial_beta_off);
    let mut lanes = Vec::with_capacity(n);
    for node in 0..n {
        let osc = Oscillator::new(cfg.clock.nominal_hz, offsets[node], bound)?;
        let act = Actuator::new(cfg.clock.step_ppm, cfg.clock.min_pulse_interval)?;
        let history = PhaseHistory::new(0.0, phases[node], clock::effective_frequency(&osc, &act))
            .with_origin(origin);
        lanes.push(Lane {
            node,
            osc,
            act,
            history,
            ctrl: ControllerState::default(),
            theta0: phases[node],
            next_k: 0,
            period: cfg.controller.period_ticks,
            delay: cfg.controller.delay_ticks,
            pending: VecDeque::new(),
            params,
            bias_ppm: 0.0,
            min_gap: f64::INFINITY,
            pulses: 0,
            suppressed: 0,
            measurements: 0,
        });
    }
    Ok(lanes)
}

/// Min-heap key: earliest time first, then class, then index.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EventKey {
    pub t: f64,
    pub class: u8,
    pub idx: u32,
}

impl PartialEq for EventKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for EventKey {}

impl PartialOrd for EventKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EventKey {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .t
            .total_cmp(&self.t)
            .then(other.class.cmp(&self.class))
            .then(other.idx.cmp(&self.idx))
    }
}
