// SPDX-License-Identifier: Apache-2.0

//! Convergence statistics over frequency telemetry.

use super::telemetry::Telemetry;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpread {
    pub nodes: Vec<usize>,
    pub spread: Vec<f64>,
    pub time_to_band: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStats {
    pub band_ppm: f64,
    pub times: Vec<f64>,
    /// Max pairwise frequency difference at each sample.
    pub spread: Vec<f64>,
    /// Start of the final stretch during which the spread stays below the
    /// band; `None` if the last sample is outside it.
    pub time_to_band: Option<f64>,
    pub final_spread: f64,
    pub groups: Vec<GroupSpread>,
    /// Spread between group means, per sample.
    pub inter_group_spread: Vec<f64>,
}

fn spread_of(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if lo.is_finite() {
        hi - lo
    } else {
        0.0
    }
}

/// First time after which `series` stays strictly below `band`.
pub fn time_to_band(times: &[f64], series: &[f64], band: f64) -> Option<f64> {
    if series.last().map_or(true, |&v| v >= band) {
        return None;
    }
    let idx = series.iter().rposition(|&v| v >= band).map_or(0, |i| i + 1);
    Some(times[idx])
}

/// Spread statistics. `partition` lists node groups (e.g. cliques); it may
/// be empty.
pub fn convergence_stats(tel: &Telemetry, band_ppm: f64, partition: &[Vec<usize>]) -> ConvergenceStats {
    let times = tel.sample_times();
    let mut spread = Vec::with_capacity(times.len());
    let mut group_series = vec![Vec::with_capacity(times.len()); partition.len()];
    let mut inter = Vec::new();
    for row in tel.freq_by_time() {
        spread.push(spread_of(row.iter().map(|s| s.freq_offset_ppm)));
        if partition.is_empty() {
            continue;
        }
        let mut means = Vec::with_capacity(partition.len());
        for (g, nodes) in partition.iter().enumerate() {
            let vals = nodes.iter().map(|&n| row[n].freq_offset_ppm);
            group_series[g].push(spread_of(vals.clone()));
            means.push(vals.sum::<f64>() / nodes.len().max(1) as f64);
        }
        inter.push(spread_of(means.into_iter()));
    }
    let groups = partition
        .iter()
        .zip(group_series)
        .map(|(nodes, s)| GroupSpread {
            nodes: nodes.clone(),
            time_to_band: time_to_band(&times, &s, band_ppm),
            spread: s,
        })
        .collect();
    ConvergenceStats {
        band_ppm,
        time_to_band: time_to_band(&times, &spread, band_ppm),
        final_spread: spread.last().copied().unwrap_or(0.0),
        times,
        spread,
        groups,
        inter_group_spread: inter,
    }
}

/// Least-squares slope of `(t, y)` points, in units of y per second.
pub fn linear_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return 0.0;
    }
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for &(t, y) in points {
        num += (t - mt) * (y - my);
        den += (t - mt) * (t - mt);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}
