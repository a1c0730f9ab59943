// SPDX-License-Identifier: Apache-2.0

//! Differences between two frequency traces.
//!
//! Both traces are shifted so that every node reads zero at its last
//! sample, then compared on the overlap of their time ranges with `b`
//! linearly interpolated at `a`'s sample times.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use super::artifacts::{read_freq_csv, FREQ_CSV};
use crate::engine::FreqSample;
use crate::{Error, Result};

/// Time series per node.
pub type Traces = BTreeMap<usize, Vec<(f64, f64)>>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeDiff {
    pub node: usize,
    pub max_abs_ppm: f64,
    pub mean_abs_ppm: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub nodes: Vec<NodeDiff>,
}

impl CompareReport {
    pub fn max_abs_ppm(&self) -> f64 {
        self.nodes.iter().map(|d| d.max_abs_ppm).fold(0.0, f64::max)
    }
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "node max_abs_ppm mean_abs_ppm points")?;
        for d in &self.nodes {
            writeln!(f, "{} {:.6} {:.6} {}", d.node, d.max_abs_ppm, d.mean_abs_ppm, d.points)?;
        }
        write!(f, "overall max_abs_ppm {:.6}", self.max_abs_ppm())
    }
}

pub fn offset_traces(samples: &[FreqSample]) -> Traces {
    let mut out = Traces::new();
    for s in samples {
        out.entry(s.node).or_default().push((s.t, s.freq_offset_ppm));
    }
    out
}

/// Traces rebuilt from the accumulated applied correction alone.
pub fn c_est_traces(samples: &[FreqSample]) -> Traces {
    let mut out = Traces::new();
    for s in samples {
        out.entry(s.node).or_default().push((s.t, s.c_est_ppm));
    }
    out
}

fn interpolate(trace: &[(f64, f64)], t: f64) -> f64 {
    let i = trace.partition_point(|&(x, _)| x < t);
    if i < trace.len() && trace[i].0 == t {
        return trace[i].1;
    }
    if i == 0 {
        return trace[0].1;
    }
    if i == trace.len() {
        return trace[i - 1].1;
    }
    let (t0, y0) = trace[i - 1];
    let (t1, y1) = trace[i];
    if t1 == t0 {
        y1
    } else {
        y0 + (y1 - y0) * (t - t0) / (t1 - t0)
    }
}

pub fn compare_traces(a: &Traces, b: &Traces) -> Result<CompareReport> {
    if a.keys().ne(b.keys()) {
        return Err(Error::Usage(format!(
            "node sets differ: {:?} vs {:?}",
            a.keys().collect::<Vec<_>>(),
            b.keys().collect::<Vec<_>>()
        )));
    }
    let mut nodes = Vec::new();
    for (&node, ta) in a {
        let tb = &b[&node];
        let (Some(&(a_first, _)), Some(&(a_last, a_end))) = (ta.first(), ta.last()) else {
            return Err(Error::Usage(format!("node {node} has no samples")));
        };
        let (Some(&(b_first, _)), Some(&(b_last, b_end))) = (tb.first(), tb.last()) else {
            return Err(Error::Usage(format!("node {node} has no samples")));
        };
        let lo = a_first.max(b_first);
        let hi = a_last.min(b_last);
        if lo > hi {
            return Err(Error::Usage(format!("node {node}: time ranges do not overlap")));
        }
        let (mut max, mut sum, mut count) = (0.0f64, 0.0, 0usize);
        for &(t, y) in ta.iter().filter(|&&(t, _)| t >= lo && t <= hi) {
            let d = ((y - a_end) - (interpolate(tb, t) - b_end)).abs();
            max = max.max(d);
            sum += d;
            count += 1;
        }
        nodes.push(NodeDiff {
            node,
            max_abs_ppm: max,
            mean_abs_ppm: if count > 0 { sum / count as f64 } else { 0.0 },
            points: count,
        });
    }
    Ok(CompareReport { nodes })
}

/// Compares the `freq.csv` files of two run directories.
pub fn compare_runs(dir_a: &Path, dir_b: &Path) -> Result<CompareReport> {
    let read = |dir: &Path| -> Result<Vec<FreqSample>> {
        read_freq_csv(BufReader::new(File::open(dir.join(FREQ_CSV))?))
    };
    compare_traces(&offset_traces(&read(dir_a)?), &offset_traces(&read(dir_b)?))
}
