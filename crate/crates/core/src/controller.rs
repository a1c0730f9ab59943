// SPDX-License-Identifier: Apache-2.0

//! Proportional clock control with quantized actuation.
//!
//! The demanded correction is proportional to the summed occupancy error of
//! a node's incoming buffers. The clock board only accepts single steps, so
//! each sample the controller compares the demand with the correction it has
//! already applied and issues at most one pulse toward it.

use crate::clock::Direction;
use crate::{Error, Result};

/// Gain scale turning `kp * frames` into ppm: 1e-3 ppm (1e-9 relative) per
/// frame, so `kp = 0.25` is 2.5e-10 and `kp = 25` is 2.5e-8.
pub const DEFAULT_GAIN_SCALE_PPM: f64 = 1e-3;

/// One sample per microsecond at the nominal 125 MHz.
pub const DEFAULT_PERIOD_TICKS: u64 = 125;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerParams {
    pub kp: f64,
    /// Occupancy subtracted from every buffer before summing.
    pub beta_off: f64,
    pub period_ticks: u64,
    pub delay_ticks: u64,
    /// ppm per frame of occupancy error at unit gain.
    pub gain_scale: f64,
}

impl ControllerParams {
    pub fn new(kp: f64, beta_off: f64, period_ticks: u64, delay_ticks: u64, gain_scale: f64) -> Result<Self> {
        let p = ControllerParams {
            kp,
            beta_off,
            period_ticks,
            delay_ticks,
            gain_scale,
        };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.kp > 0.0 && self.kp.is_finite()) {
            return Err(Error::config(format!("controller gain must be positive, got {}", self.kp)));
        }
        if !(self.gain_scale > 0.0 && self.gain_scale.is_finite()) {
            return Err(Error::config(format!(
                "gain scale must be positive, got {}",
                self.gain_scale
            )));
        }
        if self.period_ticks < 1 {
            return Err(Error::config("controller period must be at least one localtick"));
        }
        if !self.beta_off.is_finite() {
            return Err(Error::config("beta_off must be finite"));
        }
        Ok(())
    }

    /// ppm of correction per frame of occupancy error.
    pub fn ppm_per_frame(&self) -> f64 {
        self.gain_scale * self.kp
    }
}

/// `gain_scale * kp * sum(beta - beta_off)`, in ppm. A node without incoming
/// links gets zero.
pub fn relative_correction(occupancies: &[i64], params: &ControllerParams) -> f64 {
    let error: f64 = occupancies
        .iter()
        .map(|&b| b as f64 - params.beta_off)
        .sum();
    params.ppm_per_frame() * error
}

/// Sign of `c_rel - c_est`; exact ties hold.
pub fn decide(c_rel_ppm: f64, state: &ControllerState) -> Direction {
    let c_est = state.c_est_ppm();
    if c_rel_ppm < c_est {
        Direction::Down
    } else if c_rel_ppm > c_est {
        Direction::Up
    } else {
        Direction::Hold
    }
}

/// Running estimate of the correction applied to the clock board.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    c_est_ppm: f64,
    applied_steps: i64,
    pub last_c_rel_ppm: f64,
}

impl Default for ControllerState {
    fn default() -> Self {
        ControllerState {
            c_est_ppm: 0.0,
            applied_steps: 0,
            last_c_rel_ppm: 0.0,
        }
    }
}

impl ControllerState {
    pub fn c_est_ppm(&self) -> f64 {
        self.c_est_ppm
    }

    pub fn applied_steps(&self) -> i64 {
        self.applied_steps
    }

    /// Accounts for one applied pulse. `c_est` is kept as an exact multiple
    /// of the step size so that it always equals the board's correction.
    pub fn commit(mut self, direction: Direction, step_size_ppm: f64) -> Self {
        self.applied_steps += direction.sign();
        self.c_est_ppm = step_size_ppm * self.applied_steps as f64;
        self
    }
}
