// SPDX-License-Identifier: Apache-2.0

//! Adjustable oscillators and their phase.
//!
//! A node's clock runs at a piecewise-constant frequency: it changes only
//! when the controller issues a `FINC`/`FDEC` pulse. Phase (in localticks)
//! is therefore piecewise linear in time and is integrated in closed form.

use std::collections::VecDeque;

use crate::{Error, Fault, Result};

/// Nominal node clock frequency.
pub const NOMINAL_HZ: f64 = 125e6;

/// Initial accuracy of the adjustable oscillators.
pub const DEFAULT_OFFSET_BOUND_PPM: f64 = 8.0;

/// Worst-case deviation of an uncontrolled oscillator over all conditions.
pub const MAX_DEVIATION_PPM: f64 = 98.0;

pub const DEFAULT_STEP_PPM: f64 = 0.01;

pub const DEFAULT_MIN_PULSE_INTERVAL: f64 = 1e-6;

// Relative slack on pulse spacing so that `t + 1us` computed in floating
// point is not rejected against a 1us minimum.
const PULSE_SLACK: f64 = 1e-9;

/// A pulse direction. `Hold` is "neither increased nor decreased".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Down,
    Hold,
    Up,
}

impl Direction {
    pub fn sign(self) -> i64 {
        match self {
            Direction::Down => -1,
            Direction::Hold => 0,
            Direction::Up => 1,
        }
    }

    pub fn from_sign(sign: i64) -> Self {
        match sign.signum() {
            -1 => Direction::Down,
            0 => Direction::Hold,
            _ => Direction::Up,
        }
    }
}

/// An oscillator with a fixed, unknown-to-the-node frequency offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oscillator {
    pub nominal_hz: f64,
    pub offset_ppm: f64,
}

impl Oscillator {
    pub fn new(nominal_hz: f64, offset_ppm: f64, bound_ppm: f64) -> Result<Self> {
        if !(nominal_hz > 0.0 && nominal_hz.is_finite()) {
            return Err(Error::config(format!("nominal frequency must be positive, got {nominal_hz}")));
        }
        if !(offset_ppm.abs() <= bound_ppm) {
            return Err(Error::config(format!(
                "oscillator offset {offset_ppm} ppm outside +-{bound_ppm} ppm"
            )));
        }
        Ok(Oscillator {
            nominal_hz,
            offset_ppm,
        })
    }

    /// The unadjusted frequency.
    pub fn unadjusted_hz(&self) -> f64 {
        self.nominal_hz * (1.0 + self.offset_ppm * 1e-6)
    }
}

/// The `FINC`/`FDEC` interface of a clock board.
#[derive(Debug, Clone, PartialEq)]
pub struct Actuator {
    pub step_size_ppm: f64,
    pub min_pulse_interval: f64,
    net_steps: i64,
    last_pulse: Option<f64>,
}

impl Actuator {
    pub fn new(step_size_ppm: f64, min_pulse_interval: f64) -> Result<Self> {
        if !(step_size_ppm > 0.0 && step_size_ppm.is_finite()) {
            return Err(Error::config(format!("step size must be positive, got {step_size_ppm}")));
        }
        if !(min_pulse_interval >= 0.0) {
            return Err(Error::config("minimum pulse interval must be non-negative"));
        }
        Ok(Actuator {
            step_size_ppm,
            min_pulse_interval,
            net_steps: 0,
            last_pulse: None,
        })
    }

    /// FINC pulses minus FDEC pulses applied so far.
    pub fn net_steps(&self) -> i64 {
        self.net_steps
    }

    pub fn last_pulse(&self) -> Option<f64> {
        self.last_pulse
    }

    /// Total applied correction, in ppm.
    pub fn correction_ppm(&self) -> f64 {
        self.step_size_ppm * self.net_steps as f64
    }

    pub fn can_pulse(&self, t: f64) -> bool {
        match self.last_pulse {
            None => true,
            Some(last) => t - last >= self.min_pulse_interval * (1.0 - PULSE_SLACK),
        }
    }

    pub fn apply_pulse(&mut self, direction: Direction, t: f64) -> Result<(), Fault> {
        if direction == Direction::Hold {
            return Ok(());
        }
        if !self.can_pulse(t) {
            return Err(Fault::PulseTooSoon {
                gap: t - self.last_pulse.unwrap_or(f64::NEG_INFINITY),
                min: self.min_pulse_interval,
            });
        }
        self.net_steps += direction.sign();
        self.last_pulse = Some(t);
        Ok(())
    }
}

/// `nominal * (1 + offset) * (1 + step * net_steps)`.
pub fn effective_frequency(osc: &Oscillator, act: &Actuator) -> f64 {
    osc.nominal_hz * (1.0 + osc.offset_ppm * 1e-6) * (1.0 + act.correction_ppm() * 1e-6)
}

/// Offset of the effective frequency from nominal, in ppm, computed from
/// the ppm terms directly instead of subtracting two nearly equal
/// frequencies.
pub fn frequency_offset_ppm(osc: &Oscillator, act: &Actuator) -> f64 {
    let a = osc.offset_ppm;
    let b = act.correction_ppm();
    a + b + a * b * 1e-6
}

/// A stretch of constant frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start_time: f64,
    pub start_phase: f64,
    pub frequency: f64,
}

impl Segment {
    #[inline]
    fn phase_at(&self, t: f64) -> f64 {
        self.start_phase + self.frequency * (t - self.start_time)
    }

    #[inline]
    fn time_of(&self, phase: f64) -> f64 {
        self.start_time + (phase - self.start_phase) / self.frequency
    }
}

/// Piecewise-linear phase θ(t) of one clock.
///
/// The last segment extends indefinitely forward; the first one extends
/// backward down to `origin`, which lets the engine treat a clock as having
/// run at its initial frequency before the shared start trigger.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseHistory {
    segments: VecDeque<Segment>,
    origin: f64,
}

impl PhaseHistory {
    pub fn new(start_time: f64, start_phase: f64, frequency: f64) -> Self {
        assert!(frequency > 0.0, "phase history needs a positive frequency");
        let mut segments = VecDeque::new();
        segments.push_back(Segment {
            start_time,
            start_phase,
            frequency,
        });
        PhaseHistory {
            segments,
            origin: start_time,
        }
    }

    /// Allows queries back to `origin` at the initial frequency.
    pub fn with_origin(mut self, origin: f64) -> Self {
        self.origin = origin.min(self.segments[0].start_time);
        self
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.segments.iter()
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn current(&self) -> &Segment {
        self.segments.back().expect("history is never empty")
    }

    /// Starts a new segment at `t` with phase continuity.
    pub fn push_segment(&mut self, t: f64, frequency: f64) -> Result<()> {
        let last = *self.current();
        if t < last.start_time {
            return Err(Error::query(format!(
                "segment at t={t} precedes current segment at {}",
                last.start_time
            )));
        }
        if !(frequency > 0.0) {
            return Err(Error::query(format!("non-positive frequency {frequency}")));
        }
        self.segments.push_back(Segment {
            start_time: t,
            start_phase: last.phase_at(t),
            frequency,
        });
        Ok(())
    }

    #[inline]
    fn segment_at_time(&self, t: f64) -> &Segment {
        // Queries are nearly always within the last few segments.
        for seg in self.segments.iter().rev() {
            if seg.start_time <= t {
                return seg;
            }
        }
        &self.segments[0]
    }

    /// θ(t) in localticks.
    #[inline]
    pub fn phase_at(&self, t: f64) -> Result<f64> {
        if t < self.origin {
            return Err(Error::query(format!(
                "phase queried at t={t}, before history origin {}",
                self.origin
            )));
        }
        Ok(self.segment_at_time(t).phase_at(t))
    }

    /// Inverse of [`phase_at`](Self::phase_at): the time at which θ reaches `k`.
    pub fn time_of_localtick(&self, k: f64) -> Result<f64> {
        let first = &self.segments[0];
        if k < first.phase_at(self.origin) {
            return Err(Error::query(format!(
                "localtick {k} precedes the history origin"
            )));
        }
        let seg = self
            .segments
            .iter()
            .rev()
            .find(|s| s.start_phase <= k)
            .unwrap_or(first);
        Ok(seg.time_of(k))
    }

    /// Drops segments that ended at or before `cutoff`. Queries at times
    /// `>= cutoff` are unaffected.
    pub fn prune_before(&mut self, cutoff: f64) {
        let mut popped = false;
        while self.segments.len() >= 2 && self.segments[1].start_time <= cutoff {
            self.segments.pop_front();
            popped = true;
        }
        if popped {
            self.origin = self.segments[0].start_time;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn osc(offset: f64) -> Oscillator {
        Oscillator::new(NOMINAL_HZ, offset, 98.0).unwrap()
    }

    fn act_with(net: i64, step: f64) -> Actuator {
        let mut a = Actuator::new(step, 0.0).unwrap();
        let dir = Direction::from_sign(net);
        for i in 0..net.abs() {
            a.apply_pulse(dir, i as f64).unwrap();
        }
        a
    }

    #[test]
    fn effective_frequency_identity() {
        assert_eq!(effective_frequency(&osc(0.0), &act_with(0, 0.01)), NOMINAL_HZ);
    }

    #[test]
    fn effective_frequency_hundred_steps() {
        let f = effective_frequency(&osc(0.0), &act_with(100, 0.01));
        assert!((f - NOMINAL_HZ * (1.0 + 1e-6)).abs() < 1e-6);
    }

    #[test]
    fn effective_frequency_cancelling_steps_is_not_nominal() {
        // (1 - 8e-6)(1 + 8e-6) = 1 - 64e-12 exactly, so the product is
        // 125e6 - 0.008 Hz.
        let expected = 124_999_999.992;
        let f = effective_frequency(&osc(-8.0), &act_with(800, 0.01));
        assert!((f - expected).abs() < 1e-6, "{f}");
        assert!(f < NOMINAL_HZ);
        let ppm = frequency_offset_ppm(&osc(-8.0), &act_with(800, 0.01));
        assert!((ppm + 64e-6).abs() < 1e-12, "{ppm}");
    }

    #[test]
    fn oscillator_bounds() {
        assert!(Oscillator::new(NOMINAL_HZ, 8.5, 8.0).is_err());
        assert!(Oscillator::new(0.0, 0.0, 8.0).is_err());
        assert!(Oscillator::new(NOMINAL_HZ, -8.0, 8.0).is_ok());
    }

    #[test]
    fn pulses() {
        let mut a = Actuator::new(0.01, 1e-6).unwrap();
        a.apply_pulse(Direction::Up, 0.0).unwrap();
        assert_eq!(a.net_steps(), 1);

        let mut a = act_with(5, 0.01);
        a.apply_pulse(Direction::Hold, 100.0).unwrap();
        assert_eq!(a.net_steps(), 5);

        let mut a = Actuator::new(0.01, 1e-6).unwrap();
        let t = 0.37;
        a.apply_pulse(Direction::Up, t).unwrap();
        a.apply_pulse(Direction::Up, t + 1e-6).unwrap();
        a.apply_pulse(Direction::Down, t + 2e-6).unwrap();
        assert_eq!(a.net_steps(), 1);

        let mut a = Actuator::new(0.01, 1e-6).unwrap();
        a.apply_pulse(Direction::Up, t).unwrap();
        let err = a.apply_pulse(Direction::Up, t + 0.5e-6).unwrap_err();
        assert!(matches!(err, Fault::PulseTooSoon { .. }));
        assert_eq!(a.net_steps(), 1);
        // A hold is never too soon.
        a.apply_pulse(Direction::Hold, t + 0.1e-6).unwrap();
    }

    #[test]
    fn phase_single_segment() {
        let h = PhaseHistory::new(0.0, 0.0, NOMINAL_HZ);
        assert!((h.phase_at(8e-9).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(h.phase_at(1.0).unwrap(), 1.25e8);
        assert!(h.phase_at(-1e-9).is_err());
    }

    #[test]
    fn phase_two_segments() {
        let mut h = PhaseHistory::new(0.0, 0.0, NOMINAL_HZ);
        h.push_segment(1.0, NOMINAL_HZ * (1.0 + 0.01e-6)).unwrap();
        // Manual integration: 1 s at nominal, then 1 s at nominal * (1 + 1e-8).
        let expected = 1.25e8 * 1.0 + 1.25e8 * (1.0 + 1e-8) * 1.0;
        assert_eq!(expected, 1.25e8 * (2.0 + 1e-8));
        assert!((h.phase_at(2.0).unwrap() - expected).abs() < 1e-6);
    }

    #[test]
    fn localtick_inverse() {
        let h = PhaseHistory::new(0.0, 0.0, NOMINAL_HZ);
        assert!((h.time_of_localtick(1.0).unwrap() - 8e-9).abs() < 1e-21);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut h = PhaseHistory::new(0.0, 0.3, NOMINAL_HZ).with_origin(-1e-6);
        let mut t = 0.0;
        for _ in 0..50 {
            t += rng.gen_range(1e-7..1e-5);
            let f = NOMINAL_HZ * (1.0 + rng.gen_range(-20e-6..20e-6));
            h.push_segment(t, f).unwrap();
        }
        let lo = h.phase_at(-1e-6).unwrap();
        let hi = h.phase_at(t + 1e-5).unwrap();
        for _ in 0..1000 {
            let k = rng.gen_range(lo..hi);
            let back = h.phase_at(h.time_of_localtick(k).unwrap()).unwrap();
            assert!((back - k).abs() <= 1e-9 * k.abs().max(1.0), "{k} -> {back}");
        }
        assert!(h.time_of_localtick(lo - 1.0).is_err());
    }

    #[test]
    fn localtick_inverse_across_step_matches_bisection() {
        let mut h = PhaseHistory::new(0.0, 0.0, NOMINAL_HZ);
        h.push_segment(1e-6, NOMINAL_HZ * (1.0 + 0.1e-6)).unwrap();
        let bisect = |k: f64| {
            let (mut lo, mut hi) = (0.0f64, 1e-5f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if h.phase_at(mid).unwrap() < k {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let mut prev = f64::NEG_INFINITY;
        for i in 0..400 {
            let k = 120.0 + i as f64 * 0.025;
            let t = h.time_of_localtick(k).unwrap();
            assert!((t - bisect(k)).abs() < 1e-18, "k={k}");
            assert!(t > prev);
            prev = t;
        }
    }

    #[test]
    fn pruning_preserves_recent_queries() {
        let mut h = PhaseHistory::new(0.0, 0.0, NOMINAL_HZ).with_origin(-1e-7);
        for i in 1..100 {
            h.push_segment(i as f64 * 1e-6, NOMINAL_HZ * (1.0 + (i % 7) as f64 * 1e-7))
                .unwrap();
        }
        let full = h.clone();
        h.prune_before(50.5e-6);
        assert!(h.len() < full.len());
        for i in 0..500 {
            let t = 50.5e-6 + i as f64 * 1e-7;
            assert_eq!(h.phase_at(t).unwrap(), full.phase_at(t).unwrap());
        }
        assert!(h.phase_at(10e-6).is_err());
    }
}
