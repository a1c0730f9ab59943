// SPDX-License-Identifier: Apache-2.0

//! One node's control loop by hand: a fixed buffer surplus demands a
//! correction, and the clock board approaches it one step per pulse.

use bittide_core::clock::{frequency_offset_ppm, Actuator, Oscillator};
use bittide_core::controller::{decide, relative_correction, ControllerParams, ControllerState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ControllerParams::new(25.0, 0.0, 125, 0, 1e-3)?;
    let osc = Oscillator::new(125e6, -3.0, 8.0)?;
    let mut act = Actuator::new(0.1, 1e-6)?;
    let mut state = ControllerState::default();

    let occupancies = [12, 7, -4];
    let c_rel = relative_correction(&occupancies, &params);
    println!("demanded correction {c_rel:.3} ppm");

    println!("t_us direction c_est_ppm offset_ppm");
    for k in 0..12 {
        let t = k as f64 * 1e-6;
        let dir = decide(c_rel, &state);
        act.apply_pulse(dir, t)?;
        state = state.commit(dir, act.step_size_ppm);
        println!("{k} {dir:?} {:.1} {:+.4}", state.c_est_ppm(), frequency_offset_ppm(&osc, &act));
    }

    // a second pulse inside the minimum interval is refused
    println!("{:?}", act.apply_pulse(bittide_core::clock::Direction::Up, 11.5e-6));
    Ok(())
}
