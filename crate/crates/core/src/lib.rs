// SPDX-License-Identifier: Apache-2.0

//! Deterministic simulation of bittide networks.
//!
//! A bittide network aligns the frequencies of free-running node clocks
//! by observing elastic buffer occupancies: every node pops one frame per
//! local clock tick from each incoming buffer and pushes one frame per tick
//! onto each outgoing link, and a proportional controller nudges the local
//! oscillator up or down with single-step `FINC`/`FDEC` pulses.
//!
//! The crate is organised bottom-up:
//!
//! * [`topology`] builds directed network graphs with per-link latencies.
//! * [`clock`] models adjustable oscillators and exact piecewise-linear phase.
//! * [`controller`] is the proportional law with quantized actuation.
//! * [`buffers`] holds the elastic buffer and the domain difference counters.
//! * [`engine`] runs the closed loop, either with the exact hybrid model or
//!   with a frame-by-frame discrete oracle.
//! * [`harness`] parses experiment configs, runs the bundled experiments and
//!   writes CSV/SVG artifacts.

pub mod buffers;
pub mod clock;
pub mod controller;
pub mod engine;
mod error;
pub mod harness;
pub mod topology;

pub use error::{Error, Fault, Result};
