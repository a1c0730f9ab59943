// SPDX-License-Identifier: Apache-2.0

//! CSV and SVG artifacts.
//!
//! Floats are written in their shortest round-trip form, so reading a CSV
//! back reproduces the telemetry bit for bit.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{rtt_logical_latency, BufferMode, FreqSample, OccupancySample, Telemetry};
use crate::topology::{NodeId, Topology};
use crate::Result;

pub const FREQ_CSV: &str = "freq.csv";
pub const BUFFERS_CSV: &str = "buffers.csv";
pub const LATENCY_CSV: &str = "latency.csv";
pub const SUMMARY_TXT: &str = "summary.txt";
pub const FREQ_SVG: &str = "freq.svg";
pub const BUFFERS_SVG: &str = "buffers.svg";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct FreqRow {
    t_seconds: f64,
    node: usize,
    freq_offset_ppm: f64,
    c_est_ppm: f64,
    net_steps: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct BufferRow {
    t_seconds: f64,
    node: usize,
    src_node: usize,
    occupancy_frames: i64,
    mode: BufferMode,
}

/// One row of the round-trip latency table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub node: usize,
    /// 1-based position of `peer` among the node's sorted peers.
    pub link_index: usize,
    pub peer: usize,
    pub lambda_out: Option<i64>,
    pub lambda_in: Option<i64>,
    pub rtt: Option<i64>,
}

pub fn write_freq_csv<W: Write>(w: W, samples: &[FreqSample]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for s in samples {
        csv.serialize(FreqRow {
            t_seconds: s.t,
            node: s.node,
            freq_offset_ppm: s.freq_offset_ppm,
            c_est_ppm: s.c_est_ppm,
            net_steps: s.net_steps,
        })?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_freq_csv<R: Read>(r: R) -> Result<Vec<FreqSample>> {
    let mut csv = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in csv.deserialize() {
        let row: FreqRow = row?;
        out.push(FreqSample {
            t: row.t_seconds,
            node: row.node,
            freq_offset_ppm: row.freq_offset_ppm,
            c_est_ppm: row.c_est_ppm,
            net_steps: row.net_steps,
        });
    }
    Ok(out)
}

pub fn write_buffers_csv<W: Write>(w: W, samples: &[OccupancySample]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for s in samples {
        csv.serialize(BufferRow {
            t_seconds: s.t,
            node: s.node,
            src_node: s.src,
            occupancy_frames: s.frames,
            mode: s.mode,
        })?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_buffers_csv<R: Read>(r: R) -> Result<Vec<OccupancySample>> {
    let mut csv = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in csv.deserialize() {
        let row: BufferRow = row?;
        out.push(OccupancySample {
            t: row.t_seconds,
            node: row.node,
            src: row.src_node,
            frames: row.occupancy_frames,
            mode: row.mode,
        });
    }
    Ok(out)
}

pub fn latency_table(topology: &Topology, tel: &Telemetry) -> Vec<LatencyRow> {
    let lambda = |src: usize, dst: usize| {
        tel.links
            .iter()
            .position(|l| l.src == src && l.dst == dst)
            .map(|e| {
                tel.ledger
                    .get(e)
                    .and_then(|l| l.last_lambda())
                    .unwrap_or(tel.links[e].lambda)
            })
    };
    let mut rows = Vec::new();
    for node in 0..topology.n_nodes() {
        for (idx, peer) in topology.peers(NodeId(node)).into_iter().enumerate() {
            rows.push(LatencyRow {
                node,
                link_index: idx + 1,
                peer: peer.0,
                lambda_out: lambda(node, peer.0),
                lambda_in: lambda(peer.0, node),
                rtt: rtt_logical_latency(tel, node, peer.0).ok(),
            });
        }
    }
    rows
}

pub fn write_latency_csv<W: Write>(w: W, rows: &[LatencyRow]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for r in rows {
        csv.serialize(r)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_latency_csv<R: Read>(r: R) -> Result<Vec<LatencyRow>> {
    let mut csv = csv::Reader::from_reader(r);
    let rows = csv.deserialize().collect::<std::result::Result<_, _>>()?;
    Ok(rows)
}

const SVG_W: f64 = 800.0;
const SVG_H: f64 = 400.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Static line chart with one polyline per series.
pub fn render_svg(title: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let pts = series.iter().flat_map(|(_, s)| s.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (SVG_W - 2.0 * MARGIN);
    let sy = |y: f64| SVG_H - MARGIN - (y - y0) / (y1 - y0) * (SVG_H - 2.0 * MARGIN);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\">{}</text>\n",
        SVG_W / 2.0,
        xml_escape(title)
    ));
    out.push_str(&format!(
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
        SVG_W - 2.0 * MARGIN,
        SVG_H - 2.0 * MARGIN
    ));
    out.push_str(&format!(
        "<text x=\"{MARGIN}\" y=\"{}\">{x0:.3}</text><text x=\"{}\" y=\"{}\" text-anchor=\"end\">{x1:.3} s</text>\n",
        SVG_H - MARGIN + 15.0,
        SVG_W - MARGIN,
        SVG_H - MARGIN + 15.0
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{y1:.3}</text><text x=\"{}\" y=\"{}\" text-anchor=\"end\">{y0:.3}</text>\n",
        MARGIN - 4.0,
        MARGIN + 4.0,
        MARGIN - 4.0,
        SVG_H - MARGIN
    ));
    out.push_str(&format!(
        "<text x=\"12\" y=\"{}\" transform=\"rotate(-90 12 {})\" text-anchor=\"middle\">{}</text>\n",
        SVG_H / 2.0,
        SVG_H / 2.0,
        xml_escape(y_label)
    ));
    for (i, (label, s)) in series.iter().enumerate() {
        let points: Vec<String> = s
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1\" points=\"{}\"><title>{}</title></polyline>\n",
            PALETTE[i % PALETTE.len()],
            points.join(" "),
            xml_escape(label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn freq_svg(tel: &Telemetry) -> String {
    let series: Vec<_> = (0..tel.n_nodes)
        .map(|n| (format!("node {n}"), tel.freq_trace(n)))
        .collect();
    render_svg("Clock frequencies", "offset (ppm)", &series)
}

pub fn buffers_svg(tel: &Telemetry) -> String {
    let series: Vec<_> = tel
        .links
        .iter()
        .map(|l| {
            let trace = tel
                .occupancy_trace(l.dst, l.src)
                .into_iter()
                .map(|(t, v)| (t, v as f64))
                .collect();
            (format!("{} -> {}", l.src, l.dst), trace)
        })
        .collect();
    render_svg("Buffer occupancies", "frames", &series)
}

pub(crate) fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}
