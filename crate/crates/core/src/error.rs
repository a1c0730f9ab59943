// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Conditions that abort a simulation run.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Fault {
    #[error("elastic buffer overflow at node {node} (link from {src}) at t={t:.9}s, depth {depth}")]
    Overflow {
        node: usize,
        src: usize,
        t: f64,
        depth: usize,
    },
    #[error("elastic buffer underflow at node {node} (link from {src}) at t={t:.9}s")]
    Underflow { node: usize, src: usize, t: f64 },
    #[error("pulse issued {gap:.3e}s after the previous one (minimum {min:.3e}s)")]
    PulseTooSoon { gap: f64, min: f64 },
    #[error("counter accounting: {0}")]
    Accounting(String),
    #[error("node {node} diverged to {ppm:.3} ppm at t={t:.9}s (guard {guard} ppm)")]
    Divergence {
        node: usize,
        ppm: f64,
        t: f64,
        guard: f64,
    },
    #[error("model inconsistency: {0}")]
    ModelInconsistency(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("simulation fault: {0}")]
    Fault(#[from] Fault),
    #[error("query error: {0}")]
    Query(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn query(msg: impl Into<String>) -> Self {
        Error::Query(msg.into())
    }

    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Usage(_) | Error::Query(_) => 1,
            Error::Fault(_) => 2,
            Error::Io(_) | Error::Csv(_) => 3,
        }
    }
}
