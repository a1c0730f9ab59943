// SPDX-License-Identifier: Apache-2.0

//! Closed-loop network simulation.
//!
//! [`simulate`] evaluates phases in closed form and is fast enough for
//! multi-second runs on hundreds of nodes. [`discrete_oracle`] moves every
//! frame individually and serves as the reference the model is checked
//! against.

mod config;
mod lane;
mod latency;
mod model;
mod oracle;
mod stats;
mod telemetry;

pub use config::{
    BufferConfig, ClockConfig, ControllerConfig, Mode, SimConfig, DEFAULT_CADENCE,
    DEFAULT_DIVERGENCE_GUARD_PPM, DEFAULT_PIPELINE_FRAMES,
};
pub use latency::{buffer_occupancy_model, in_flight_estimate, rtt_logical_latency, PipelineEstimate};
pub use model::simulate;
pub use oracle::{discrete_oracle, ORACLE_MAX_DURATION, ORACLE_MAX_NODES};
pub use stats::{convergence_stats, linear_slope, time_to_band, ConvergenceStats, GroupSpread};
pub use telemetry::{
    BufferMode, EventCounts, FrameLedger, FreqSample, LatencyRun, LinkInfo, MeasurementRecord,
    OccupancySample, PulseRecord, ReframeRecord, Telemetry,
};
