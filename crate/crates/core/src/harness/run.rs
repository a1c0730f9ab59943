// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::time::{Duration, Instant};

use super::artifacts::{self, LatencyRow};
use super::config::ExperimentConfig;
use crate::engine::{convergence_stats, simulate, ConvergenceStats, EventCounts, Telemetry};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub name: String,
    pub stats: Option<ConvergenceStats>,
    pub latency: Vec<LatencyRow>,
    pub fault: Option<String>,
    pub counts: EventCounts,
    pub wall_clock: Duration,
}

impl RunSummary {
    pub fn time_to_band(&self) -> Option<f64> {
        self.stats.as_ref().and_then(|s| s.time_to_band)
    }

    pub fn final_spread(&self) -> Option<f64> {
        self.stats.as_ref().map(|s| s.final_spread)
    }

    pub fn render(&self, cfg: &ExperimentConfig) -> String {
        let sim = &cfg.sim;
        let mut s = String::new();
        let _ = writeln!(s, "name: {}", self.name);
        let _ = writeln!(
            s,
            "topology: {} nodes, {} links",
            sim.topology.n_nodes(),
            sim.topology.links().len()
        );
        let _ = writeln!(s, "mode: {}", sim.mode);
        let _ = writeln!(s, "seed: {}", sim.seed);
        let _ = writeln!(s, "duration_s: {}", sim.duration);
        let _ = writeln!(s, "step_ppm: {}", sim.clock.step_ppm);
        let _ = writeln!(s, "kp: {}", sim.controller.kp);
        let _ = writeln!(s, "band_ppm: {}", cfg.band_ppm);
        match self.time_to_band() {
            Some(t) => {
                let _ = writeln!(s, "time_to_band_s: {t}");
            }
            None => {
                let _ = writeln!(s, "time_to_band_s: never");
            }
        }
        if let Some(f) = self.final_spread() {
            let _ = writeln!(s, "final_spread_ppm: {f}");
        }
        let rtts: Vec<i64> = self.latency.iter().filter_map(|r| r.rtt).collect();
        if let (Some(lo), Some(hi)) = (rtts.iter().min(), rtts.iter().max()) {
            let _ = writeln!(s, "rtt_range: {lo}..{hi}");
        }
        let c = &self.counts;
        let _ = writeln!(s, "measurements: {}", c.measurements);
        let _ = writeln!(s, "pulses: {}", c.pulses);
        let _ = writeln!(s, "suppressed_pulses: {}", c.suppressed_pulses);
        let _ = writeln!(s, "wall_clock_s: {:.3}", self.wall_clock.as_secs_f64());
        let _ = writeln!(s, "fault: {}", self.fault.as_deref().unwrap_or("none"));
        if let Some(stats) = &self.stats {
            for (i, g) in stats.groups.iter().enumerate() {
                let t = g.time_to_band.map_or("never".to_string(), |t| t.to_string());
                let _ = writeln!(s, "group_{i}: nodes {:?}, time_to_band_s {t}", g.nodes);
            }
            let _ = writeln!(s);
            let _ = write!(s, "t_seconds spread_ppm");
            for i in 0..stats.groups.len() {
                let _ = write!(s, " group_{i}_ppm");
            }
            if !stats.groups.is_empty() {
                let _ = write!(s, " inter_group_ppm");
            }
            let _ = writeln!(s);
            for (k, t) in stats.times.iter().enumerate() {
                let _ = write!(s, "{t:.6} {:.6}", stats.spread[k]);
                for g in &stats.groups {
                    let _ = write!(s, " {:.6}", g.spread[k]);
                }
                if !stats.groups.is_empty() {
                    let _ = write!(s, " {:.6}", stats.inter_group_spread[k]);
                }
                let _ = writeln!(s);
            }
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub telemetry: Telemetry,
}

/// Simulates one experiment and writes its artifacts to `cfg.out_dir`. On a
/// simulation fault the summary is still written before the fault is
/// returned.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let start = Instant::now();
    let result = simulate(&cfg.sim);
    let wall_clock = start.elapsed();
    let tel = match result {
        Ok(tel) => tel,
        Err(Error::Fault(fault)) => {
            let summary = RunSummary {
                name: cfg.name.clone(),
                stats: None,
                latency: Vec::new(),
                fault: Some(fault.to_string()),
                counts: EventCounts::default(),
                wall_clock,
            };
            artifacts::write_file(&cfg.out_dir, artifacts::SUMMARY_TXT, summary.render(cfg).as_bytes())?;
            return Err(Error::Fault(fault));
        }
        Err(e) => return Err(e),
    };
    log::info!("{}: simulated {} s in {:.2?}", cfg.name, cfg.sim.duration, wall_clock);
    let summary = RunSummary {
        name: cfg.name.clone(),
        stats: Some(convergence_stats(&tel, cfg.band_ppm, &cfg.partition)),
        latency: artifacts::latency_table(&cfg.sim.topology, &tel),
        fault: None,
        counts: tel.counts,
        wall_clock,
    };
    write_artifacts(cfg, &tel, &summary)?;
    Ok(RunOutput {
        summary,
        telemetry: tel,
    })
}

pub fn write_artifacts(cfg: &ExperimentConfig, tel: &Telemetry, summary: &RunSummary) -> Result<()> {
    let dir = &cfg.out_dir;
    std::fs::create_dir_all(dir)?;
    artifacts::write_freq_csv(BufWriter::new(File::create(dir.join(artifacts::FREQ_CSV))?), &tel.freq)?;
    artifacts::write_buffers_csv(
        BufWriter::new(File::create(dir.join(artifacts::BUFFERS_CSV))?),
        &tel.occupancy,
    )?;
    artifacts::write_latency_csv(
        BufWriter::new(File::create(dir.join(artifacts::LATENCY_CSV))?),
        &summary.latency,
    )?;
    artifacts::write_file(dir, artifacts::SUMMARY_TXT, summary.render(cfg).as_bytes())?;
    if cfg.svg {
        artifacts::write_file(dir, artifacts::FREQ_SVG, artifacts::freq_svg(tel).as_bytes())?;
        artifacts::write_file(dir, artifacts::BUFFERS_SVG, artifacts::buffers_svg(tel).as_bytes())?;
    }
    Ok(())
}
