// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;

use crate::buffers::{DEFAULT_DEPTH, DEFAULT_EB_INIT, DEFAULT_GRAY_BITS};
use crate::clock::{
    DEFAULT_MIN_PULSE_INTERVAL, DEFAULT_OFFSET_BOUND_PPM, DEFAULT_STEP_PPM, MAX_DEVIATION_PPM,
    NOMINAL_HZ,
};
use crate::controller::{ControllerParams, DEFAULT_GAIN_SCALE_PPM, DEFAULT_PERIOD_TICKS};
use crate::topology::Topology;
use crate::{Error, Result};

/// Frames held in each direction of a transceiver pipeline. Calibrated so
/// that short links (10 ns, two 18-frame buffers) give round trips of 68-70.
pub const DEFAULT_PIPELINE_FRAMES: f64 = 15.0;

pub const DEFAULT_CADENCE: f64 = 0.06;

/// Twice the worst-case oscillator deviation.
pub const DEFAULT_DIVERGENCE_GUARD_PPM: f64 = 2.0 * MAX_DEVIATION_PPM;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Domain difference counters for the whole run.
    Ddc,
    /// Real elastic buffers from the start.
    Elastic,
    /// Counters first, then a switch to recentered elastic buffers.
    DdcThenReframe,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Ddc => "ddc",
            Mode::Elastic => "elastic",
            Mode::DdcThenReframe => "ddc_then_reframe",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ddc" => Ok(Mode::Ddc),
            "elastic" | "eb" => Ok(Mode::Elastic),
            "ddc_then_reframe" => Ok(Mode::DdcThenReframe),
            other => Err(Error::config(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClockConfig {
    pub nominal_hz: f64,
    /// Offsets are drawn uniformly from +-bound unless given explicitly.
    pub offset_bound_ppm: f64,
    pub offsets_ppm: Option<Vec<f64>>,
    pub step_ppm: f64,
    pub min_pulse_interval: f64,
    /// Initial phases are a uniform fraction of a tick plus an integer drawn
    /// from `0..phase_spread_ticks`, unless given explicitly.
    pub phase_spread_ticks: u64,
    pub initial_phases: Option<Vec<f64>>,
}

impl Default for ClockConfig {
    fn default() -> Self {
        ClockConfig {
            nominal_hz: NOMINAL_HZ,
            offset_bound_ppm: DEFAULT_OFFSET_BOUND_PPM,
            offsets_ppm: None,
            step_ppm: DEFAULT_STEP_PPM,
            min_pulse_interval: DEFAULT_MIN_PULSE_INTERVAL,
            phase_spread_ticks: 1000,
            initial_phases: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    pub kp: f64,
    pub gain_scale: f64,
    pub beta_off_ddc: f64,
    /// Defaults to half the buffer depth.
    pub beta_off_eb: Option<f64>,
    pub period_ticks: u64,
    pub delay_ticks: u64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            kp: 0.25,
            gain_scale: DEFAULT_GAIN_SCALE_PPM,
            beta_off_ddc: 0.0,
            beta_off_eb: None,
            period_ticks: DEFAULT_PERIOD_TICKS,
            delay_ticks: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BufferConfig {
    pub depth: usize,
    pub eb_init: usize,
    pub gray_bits: u32,
    /// Drive the DDC through Gray sampling and extension instead of
    /// computing the extended counts directly.
    pub emulate_counters: bool,
}

impl Default for BufferConfig {
    fn default() -> Self {
        BufferConfig {
            depth: DEFAULT_DEPTH,
            eb_init: DEFAULT_EB_INIT,
            gray_bits: DEFAULT_GRAY_BITS,
            emulate_counters: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub topology: Topology,
    pub mode: Mode,
    pub duration: f64,
    pub seed: u64,
    pub cadence: f64,
    pub clock: ClockConfig,
    pub controller: ControllerConfig,
    pub buffers: BufferConfig,
    pub pipeline_frames: f64,
    pub reframe_at: Option<f64>,
    pub divergence_guard_ppm: f64,
    /// Keep every controller measurement (memory grows with run length).
    pub record_measurements: bool,
    pub record_pulses: bool,
}

impl SimConfig {
    pub fn new(topology: Topology) -> Self {
        SimConfig {
            topology,
            mode: Mode::Ddc,
            duration: 1.0,
            seed: 0,
            cadence: DEFAULT_CADENCE,
            clock: ClockConfig::default(),
            controller: ControllerConfig::default(),
            buffers: BufferConfig::default(),
            pipeline_frames: DEFAULT_PIPELINE_FRAMES,
            reframe_at: None,
            divergence_guard_ppm: DEFAULT_DIVERGENCE_GUARD_PPM,
            record_measurements: false,
            record_pulses: false,
        }
    }

    /// Step 0.1 ppm and `kp = 25`.
    pub fn realistic(mut self) -> Self {
        self.clock.step_ppm = 0.1;
        self.controller.kp = 25.0;
        self
    }

    pub fn beta_off_eb(&self) -> f64 {
        self.controller
            .beta_off_eb
            .unwrap_or(self.buffers.depth as f64 / 2.0)
    }

    pub(crate) fn params(&self, beta_off: f64) -> ControllerParams {
        ControllerParams {
            kp: self.controller.kp,
            beta_off,
            period_ticks: self.controller.period_ticks,
            delay_ticks: self.controller.delay_ticks,
            gain_scale: self.controller.gain_scale,
        }
    }

    /// Physical latency plus the transceiver pipeline of link `e`.
    pub fn effective_latency(&self, e: usize) -> f64 {
        self.topology.links()[e].latency + self.pipeline_frames / self.clock.nominal_hz
    }

    /// Number of telemetry samples taken at `0, cadence, 2 cadence, ...`.
    pub fn sample_count(&self) -> usize {
        (self.duration / self.cadence - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let report = self.topology.validate();
        if !report.is_ok() {
            let msgs: Vec<String> = report.errors.iter().map(|e| e.to_string()).collect();
            return Err(Error::config(format!("invalid topology: {}", msgs.join("; "))));
        }
        let n = self.topology.n_nodes();
        if n == 0 {
            return Err(Error::config("topology has no nodes"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::config("duration must be positive"));
        }
        if !(self.cadence > 0.0 && self.cadence.is_finite()) {
            return Err(Error::config("telemetry cadence must be positive"));
        }
        self.params(self.controller.beta_off_ddc).check()?;
        self.params(self.beta_off_eb()).check()?;
        if let Some(offsets) = &self.clock.offsets_ppm {
            if offsets.len() != n {
                return Err(Error::config(format!(
                    "{} offsets given for {n} nodes",
                    offsets.len()
                )));
            }
        }
        if let Some(phases) = &self.clock.initial_phases {
            if phases.len() != n {
                return Err(Error::config(format!(
                    "{} initial phases given for {n} nodes",
                    phases.len()
                )));
            }
            if phases.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::config("initial phases must be finite and non-negative"));
            }
        }
        if !(self.clock.step_ppm > 0.0) {
            return Err(Error::config("step size must be positive"));
        }
        if self.buffers.eb_init > self.buffers.depth || self.buffers.depth == 0 {
            return Err(Error::config(format!(
                "elastic buffer init {} must lie in 0..={} (depth)",
                self.buffers.eb_init, self.buffers.depth
            )));
        }
        if !(2..=63).contains(&self.buffers.gray_bits) {
            return Err(Error::config("gray counter width must be in 2..=63"));
        }
        if !(self.pipeline_frames >= 0.0) {
            return Err(Error::config("pipeline depth must be non-negative"));
        }
        match (self.mode, self.reframe_at) {
            (Mode::DdcThenReframe, None) => {
                return Err(Error::config("mode ddc_then_reframe needs reframe.at_seconds"))
            }
            (Mode::DdcThenReframe, Some(t)) if !(t >= 0.0) => {
                return Err(Error::config("reframe time must be non-negative"))
            }
            (Mode::Ddc | Mode::Elastic, Some(_)) => {
                return Err(Error::config(format!(
                    "reframe.at_seconds is only valid with ddc_then_reframe, mode is {}",
                    self.mode
                )))
            }
            _ => {}
        }
        if !(self.divergence_guard_ppm > 0.0) {
            return Err(Error::config("divergence guard must be positive"));
        }
        Ok(())
    }
}
