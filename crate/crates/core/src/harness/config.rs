// SPDX-License-Identifier: Apache-2.0

//! Experiment config files.
//!
//! A config is a flat list of `key = value` lines. `#` starts a comment.
//! Keys are dotted; the `link` key may be repeated. The grammar:
//!
//! ```text
//! file     = { line } ;
//! line     = [ entry ] [ "#" comment ] newline ;
//! entry    = key "=" value ;
//! key      = ident { "." ident } ;
//! value    = number | word | list | latency | link ;
//! list     = item { ( "," | whitespace ) item } ;
//! latency  = number            (* seconds *)
//!          | number "m" ;      (* meters of fiber *)
//! link     = node node latency ;
//! ```
//!
//! Recognized keys (defaults in brackets):
//!
//! | key | meaning |
//! |---|---|
//! | `name` | experiment name [`experiment`] |
//! | `seed` | RNG seed [0] |
//! | `duration` | simulated seconds [1] |
//! | `mode` | `ddc`, `elastic` or `ddc_then_reframe` [`ddc`] |
//! | `telemetry.cadence` | sampling period in seconds [0.06] |
//! | `topology.kind` | `complete`, `hourglass`, `cube`, `torus` or `custom` |
//! | `topology.n` | node count for `complete` and `custom` |
//! | `topology.dims` | torus dimensions, e.g. `6,6,6` |
//! | `topology.latency` | default link latency [10e-9] |
//! | `topology.fiber_speed_mps` | propagation speed for `m` latencies [2.0309e8] |
//! | `link` | `src dst latency`: overrides one direction of a generated link, or adds a link to a `custom` topology |
//! | `clock.nominal_hz` | [125e6] |
//! | `clock.offset_bound_ppm` | offsets drawn from +-bound [8] |
//! | `clock.offsets_ppm` | explicit offsets, one per node |
//! | `clock.step_ppm` | actuator step [0.01] |
//! | `clock.min_pulse_interval` | seconds [1e-6] |
//! | `clock.phase_spread_ticks` | [1000] |
//! | `clock.initial_phases` | explicit phases in localticks |
//! | `controller.kp` | [0.25] |
//! | `controller.gain_scale` | ppm per frame [1e-3] |
//! | `controller.beta_off_ddc` | [0] |
//! | `controller.beta_off_eb` | [depth / 2] |
//! | `controller.period_ticks` | [125] |
//! | `controller.delay_ticks` | [0] |
//! | `buffers.depth` | [32] |
//! | `buffers.eb_init` | [18] |
//! | `buffers.gray_bits` | [6] |
//! | `buffers.emulate_counters` | [false] |
//! | `pipeline.frames` | per direction [15] |
//! | `reframe.at_seconds` | required by `ddc_then_reframe` |
//! | `guard.divergence_ppm` | [196] |
//! | `stats.band_ppm` | convergence band [1] |
//! | `stats.partition` | node groups separated by `|`, e.g. `0 1 2 3 | 4 5 6 7` |
//! | `output.dir` | artifact directory [`out/<name>`] |
//! | `output.svg` | also write SVG plots [false] |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::engine::SimConfig;
use crate::topology::{
    fiber_latency, generate, Link, NodeId, Topology, TopologyKind, DEFAULT_LINK_LATENCY,
    FIBER_SPEED_MPS,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub sim: SimConfig,
    pub out_dir: PathBuf,
    /// Node groups for intra/inter-group spread statistics.
    pub partition: Vec<Vec<usize>>,
    pub band_ppm: f64,
    pub svg: bool,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        text.parse()
    }
}

struct Entry {
    line: usize,
    value: String,
}

fn parse_num<T: FromStr>(key: &str, e: &Entry) -> Result<T> {
    e.value.parse().map_err(|_| {
        Error::config(format!(
            "line {}: {key}: cannot parse '{}'",
            e.line, e.value
        ))
    })
}

fn parse_list<T: FromStr>(key: &str, e: &Entry) -> Result<Vec<T>> {
    e.value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse().map_err(|_| {
                Error::config(format!("line {}: {key}: cannot parse '{s}'", e.line))
            })
        })
        .collect()
}

fn parse_bool(key: &str, e: &Entry) -> Result<bool> {
    match e.value.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::config(format!(
            "line {}: {key}: expected true or false, got '{other}'",
            e.line
        ))),
    }
}

/// Seconds, or meters of fiber with an `m` suffix.
pub fn parse_latency(s: &str, fiber_speed_mps: f64) -> Result<f64> {
    let (num, fiber) = match s.strip_suffix('m') {
        Some(n) => (n, true),
        None => (s, false),
    };
    let v: f64 = num
        .parse()
        .map_err(|_| Error::config(format!("bad latency '{s}'")))?;
    Ok(if fiber {
        fiber_latency(v, fiber_speed_mps)
    } else {
        v
    })
}

fn parse_partition(e: &Entry) -> Result<Vec<Vec<usize>>> {
    e.value
        .split('|')
        .map(|group| {
            let g = Entry {
                line: e.line,
                value: group.trim().to_string(),
            };
            parse_list("stats.partition", &g)
        })
        .collect()
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut keys: BTreeMap<String, Entry> = BTreeMap::new();
        let mut links = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| {
                Error::config(format!("line {line}: expected 'key = value', got '{content}'"))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(Error::config(format!("line {line}: empty key")));
            }
            if key == "link" {
                let parts: Vec<&str> = value.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(Error::config(format!(
                        "line {line}: link needs 'src dst latency', got '{value}'"
                    )));
                }
                let bad = |what: &str| Error::config(format!("line {line}: bad link {what}"));
                let src: usize = parts[0].parse().map_err(|_| bad("source"))?;
                let dst: usize = parts[1].parse().map_err(|_| bad("destination"))?;
                links.push((line, src, dst, parts[2].to_string()));
                continue;
            }
            if keys.insert(key.clone(), Entry { line, value }).is_some() {
                return Err(Error::config(format!("line {line}: duplicate key '{key}'")));
            }
        }
        build(keys, links)
    }
}

type RawLink = (usize, usize, usize, String);

fn build(mut keys: BTreeMap<String, Entry>, raw_links: Vec<RawLink>) -> Result<ExperimentConfig> {
    let mut take = |k: &str| keys.remove(k).map(|e| (k.to_string(), e));

    let fiber_speed = match take("topology.fiber_speed_mps") {
        Some((k, e)) => parse_num(&k, &e)?,
        None => FIBER_SPEED_MPS,
    };
    if !(fiber_speed > 0.0) {
        return Err(Error::config("topology.fiber_speed_mps must be positive"));
    }
    let mut links = Vec::with_capacity(raw_links.len());
    for (line, src, dst, latency) in raw_links {
        let latency = parse_latency(&latency, fiber_speed)
            .map_err(|e| Error::config(format!("line {line}: {e}")))?;
        links.push((line, src, dst, latency));
    }

    let name = take("name").map_or("experiment".to_string(), |(_, e)| e.value);
    let latency = match take("topology.latency") {
        Some((_, e)) => parse_latency(&e.value, fiber_speed)
            .map_err(|err| Error::config(format!("line {}: {err}", e.line)))?,
        None => DEFAULT_LINK_LATENCY,
    };
    let kind = take("topology.kind")
        .ok_or_else(|| Error::config("missing topology.kind"))?
        .1;
    let n = take("topology.n");
    let dims = take("topology.dims");
    let topology = match kind.value.as_str() {
        "custom" => {
            let (k, e) = n.ok_or_else(|| Error::config("custom topology needs topology.n"))?;
            let n: usize = parse_num(&k, &e)?;
            let links = links
                .iter()
                .map(|&(_, src, dst, latency)| Link {
                    src: NodeId(src),
                    dst: NodeId(dst),
                    latency,
                })
                .collect();
            Topology::new(n, links)
        }
        name => {
            let kind = match name {
                "complete" => {
                    let (k, e) = n.ok_or_else(|| Error::config("complete topology needs topology.n"))?;
                    TopologyKind::Complete { n: parse_num(&k, &e)? }
                }
                "hourglass" => TopologyKind::Hourglass,
                "cube" => TopologyKind::Cube,
                "torus" => {
                    let (k, e) = dims.ok_or_else(|| Error::config("torus topology needs topology.dims"))?;
                    TopologyKind::Torus { dims: parse_list(&k, &e)? }
                }
                other => {
                    return Err(Error::config(format!(
                        "line {}: unknown topology kind '{other}'",
                        kind.line
                    )))
                }
            };
            let mut topo = generate(&kind, latency)?;
            for &(line, src, dst, latency) in &links {
                topo.set_link_latency(NodeId(src), NodeId(dst), latency)
                    .map_err(|e| Error::config(format!("line {line}: {e}")))?;
            }
            topo
        }
    };

    let mut sim = SimConfig::new(topology);
    if let Some((k, e)) = take("seed") {
        sim.seed = parse_num(&k, &e)?;
    }
    if let Some((k, e)) = take("duration") {
        sim.duration = parse_num(&k, &e)?;
    }
    if let Some((_, e)) = take("mode") {
        sim.mode = e
            .value
            .parse()
            .map_err(|err| Error::config(format!("line {}: {err}", e.line)))?;
    }
    if let Some((k, e)) = take("telemetry.cadence") {
        sim.cadence = parse_num(&k, &e)?;
    }
    if let Some((k, e)) = take("clock.nominal_hz") {
        sim.clock.nominal_hz = parse_num(&k, &e)?;
    }
    if let Some((k, e)) = take("clock.offset_bound_ppm") {
        sim.clock.offset_bound_ppm = parse_num(&k, &e)?;
    }
    if let Some((k, e)) = take("clock.offsets_ppm") {
        sim.clock.offsets_ppm = Some(parse_list(&k, &e)?);
    }
    if let Some((k, e)) = take("clock.step_ppm") {
        sim.clock.step_ppm = parse_num(&k, &e)?;
    }
    if let Some((k, e)) = take("clock.min_pulse_interval") {
        sim.clock.min_pulse_interval = parse_num(&k, &e)?;
    }
    if let Some((k, e)) = take("clock.phase_spread_ticks") {
        sim.clock.phase_spread_ticks = parse_num(&k, &e)?;
    }
    if let Some((k, e)) = take("clock.initial_phases") {
        sim.clock.initial_phases = Some(parse_list(&k, &e)?);
    }
    if let Some((k, e)) = take("controller.kp") {
        sim.controller.kp = parse_num(&k, &e)?;
    }
    if let Some((k, e)) = take("controller.gain_scale") {
        sim.controller.gain_scale = parse_num(&k, &e)?;
    }
    if let Some((k, e)) = take("controller.beta_off_ddc") {
        sim.controller.beta_off_ddc = parse_num(&k, &e)?;
    }
    if let Some((k, e)) = take("controller.beta_off_eb") {
        sim.controller.beta_off_eb = Some(parse_num(&k, &e)?);
    }
    if let Some((k, e)) = take("controller.period_ticks") {
        sim.controller.period_ticks = parse_num(&k, &e)?;
    }
    if let Some((k, e)) = take("controller.delay_ticks") {
        sim.controller.delay_ticks = parse_num(&k, &e)?;
    }
    if let Some((k, e)) = take("buffers.depth") {
        sim.buffers.depth = parse_num(&k, &e)?;
    }
    if let Some((k, e)) = take("buffers.eb_init") {
        sim.buffers.eb_init = parse_num(&k, &e)?;
    }
    if let Some((k, e)) = take("buffers.gray_bits") {
        sim.buffers.gray_bits = parse_num(&k, &e)?;
    }
    if let Some((k, e)) = take("buffers.emulate_counters") {
        sim.buffers.emulate_counters = parse_bool(&k, &e)?;
    }
    if let Some((k, e)) = take("pipeline.frames") {
        sim.pipeline_frames = parse_num(&k, &e)?;
    }
    if let Some((k, e)) = take("reframe.at_seconds") {
        sim.reframe_at = Some(parse_num(&k, &e)?);
    }
    if let Some((k, e)) = take("guard.divergence_ppm") {
        sim.divergence_guard_ppm = parse_num(&k, &e)?;
    }
    let band_ppm = match take("stats.band_ppm") {
        Some((k, e)) => parse_num(&k, &e)?,
        None => 1.0,
    };
    let partition = match take("stats.partition") {
        Some((_, e)) => parse_partition(&e)?,
        None => Vec::new(),
    };
    let out_dir = match take("output.dir") {
        Some((_, e)) => PathBuf::from(e.value),
        None => PathBuf::from("out").join(&name),
    };
    let svg = match take("output.svg") {
        Some((k, e)) => parse_bool(&k, &e)?,
        None => false,
    };
    if let Some((k, e)) = keys.into_iter().next() {
        return Err(Error::config(format!("line {}: unknown key '{k}'", e.line)));
    }

    let cfg = ExperimentConfig {
        name,
        sim,
        out_dir,
        partition,
        band_ppm,
        svg,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        let n = self.sim.topology.n_nodes();
        for group in &self.partition {
            if group.is_empty() {
                return Err(Error::config("empty group in stats.partition"));
            }
            if let Some(&bad) = group.iter().find(|&&v| v >= n) {
                return Err(Error::config(format!(
                    "stats.partition names node {bad}, topology has {n}"
                )));
            }
        }
        if !(self.band_ppm > 0.0) {
            return Err(Error::config("stats.band_ppm must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Mode;

    #[test]
    fn minimal() {
        let cfg: ExperimentConfig = "topology.kind = complete\ntopology.n = 3\n".parse().unwrap();
        assert_eq!(cfg.sim.topology.n_nodes(), 3);
        assert_eq!(cfg.name, "experiment");
        assert_eq!(cfg.sim.mode, Mode::Ddc);
    }

    #[test]
    fn full() {
        let text = "\
name = ll   # comment
seed = 7
duration = 0.5
mode = ddc_then_reframe
reframe.at_seconds = 0.3
topology.kind = complete
topology.n = 4
link = 0 2 2000m
controller.kp = 25
clock.step_ppm = 0.1
stats.partition = 0 1 | 2 3
output.svg = true
";
        let cfg: ExperimentConfig = text.parse().unwrap();
        assert_eq!(cfg.sim.seed, 7);
        assert_eq!(cfg.sim.reframe_at, Some(0.3));
        assert_eq!(cfg.partition, vec![vec![0, 1], vec![2, 3]]);
        let e = cfg.sim.topology.find_link(NodeId(0), NodeId(2)).unwrap();
        let frames = cfg.sim.topology.links()[e].latency * 125e6;
        assert!((frames - 1231.0).abs() < 1e-6);
        let back = cfg.sim.topology.find_link(NodeId(2), NodeId(0)).unwrap();
        assert_eq!(cfg.sim.topology.links()[back].latency, DEFAULT_LINK_LATENCY);
        assert!(cfg.svg);
    }

    #[test]
    fn custom_links() {
        let cfg: ExperimentConfig = "topology.kind = custom\ntopology.n = 2\nlink = 0 1 1e-8\nlink = 1 0 2e-8\n"
            .parse()
            .unwrap();
        assert_eq!(cfg.sim.topology.links().len(), 2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = "topology.kind = complete\ntopology.n = 3\ncontroller.kp = x\n"
            .parse::<ExperimentConfig>()
            .unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = "topology.kind = complete\ntopology.n = 3\nbogus = 1\n"
            .parse::<ExperimentConfig>()
            .unwrap_err();
        assert!(err.to_string().contains("unknown key"), "{err}");
        assert!("topology.n = 3".parse::<ExperimentConfig>().is_err());
        assert!("topology.kind = complete\ntopology.n = 3\nno equals\n"
            .parse::<ExperimentConfig>()
            .is_err());
        assert!("topology.kind = custom\ntopology.n = 3\nlink = 0 1 1e-8\n"
            .parse::<ExperimentConfig>()
            .is_err(), "disconnected custom topology");
        assert!("topology.kind = complete\ntopology.n = 3\nseed = 1\nseed = 2\n"
            .parse::<ExperimentConfig>()
            .is_err());
        assert!("topology.kind = complete\ntopology.n = 3\nstats.partition = 0 | 5\n"
            .parse::<ExperimentConfig>()
            .is_err());
    }
}
