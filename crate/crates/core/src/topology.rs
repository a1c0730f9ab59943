// SPDX-License-Identifier: Apache-2.0

//! Directed network graphs with per-direction physical latencies.

use std::collections::BTreeSet;
use std::fmt;

use crate::{Error, Result};

/// Latency used for the short (2 m or less) links of the desk setup.
pub const DEFAULT_LINK_LATENCY: f64 = 10e-9;

/// Propagation speed in fiber, calibrated so that 2 km of fiber holds
/// 1231 frames at 125 MHz.
pub const FIBER_SPEED_MPS: f64 = 2000.0 * 125e6 / 1231.0;

/// Physical latency of a fiber of the given length.
pub fn fiber_latency(meters: f64, speed_mps: f64) -> f64 {
    meters / speed_mps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One direction of a physical link. The reverse direction is a separate
/// `Link` and may carry a different latency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub src: NodeId,
    pub dst: NodeId,
    /// Seconds of flight time.
    pub latency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TopologyKind {
    Complete { n: usize },
    /// Two fully connected groups of four joined by a single bridge 3 <-> 4.
    Hourglass,
    /// The 3-dimensional hypercube on 8 nodes.
    Cube,
    Torus { dims: Vec<usize> },
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyKind::Complete { n } => write!(f, "complete({n})"),
            TopologyKind::Hourglass => write!(f, "hourglass"),
            TopologyKind::Cube => write!(f, "cube"),
            TopologyKind::Torus { dims } => {
                let dims: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
                write!(f, "torus({})", dims.join("x"))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    n_nodes: usize,
    links: Vec<Link>,
}

/// Problems reported by [`Topology::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum TopologyIssue {
    Disconnected { components: usize },
    SelfLoop { node: NodeId },
    NonPositiveLatency { src: NodeId, dst: NodeId, latency: f64 },
    EndpointOutOfRange { src: NodeId, dst: NodeId },
    DuplicateLink { src: NodeId, dst: NodeId },
    MissingReverse { src: NodeId, dst: NodeId },
}

impl fmt::Display for TopologyIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyIssue::Disconnected { components } => {
                write!(f, "disconnected: {components} components")
            }
            TopologyIssue::SelfLoop { node } => write!(f, "self-loop at node {node}"),
            TopologyIssue::NonPositiveLatency { src, dst, latency } => {
                write!(f, "non-positive latency {latency} on link {src}->{dst}")
            }
            TopologyIssue::EndpointOutOfRange { src, dst } => {
                write!(f, "link {src}->{dst} has an endpoint out of range")
            }
            TopologyIssue::DuplicateLink { src, dst } => write!(f, "duplicate link {src}->{dst}"),
            TopologyIssue::MissingReverse { src, dst } => {
                write!(f, "link {src}->{dst} has no reverse direction")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub errors: Vec<TopologyIssue>,
    pub warnings: Vec<TopologyIssue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

impl Topology {
    /// Builds a topology from explicit links without checking them; use
    /// [`Topology::validate`] to inspect the result.
    pub fn new(n_nodes: usize, links: Vec<Link>) -> Self {
        Topology { n_nodes, links }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn find_link(&self, src: NodeId, dst: NodeId) -> Option<usize> {
        self.links.iter().position(|l| l.src == src && l.dst == dst)
    }

    /// Indices of links terminating at `node`, in link order.
    pub fn incoming(&self, node: NodeId) -> Vec<usize> {
        (0..self.links.len())
            .filter(|&e| self.links[e].dst == node)
            .collect()
    }

    /// Sorted, deduplicated set of nodes adjacent to `node` in either direction.
    pub fn peers(&self, node: NodeId) -> Vec<NodeId> {
        let set: BTreeSet<NodeId> = self
            .links
            .iter()
            .filter_map(|l| {
                if l.src == node {
                    Some(l.dst)
                } else if l.dst == node {
                    Some(l.src)
                } else {
                    None
                }
            })
            .collect();
        set.into_iter().collect()
    }

    pub fn max_latency(&self) -> f64 {
        self.links.iter().map(|l| l.latency).fold(0.0, f64::max)
    }

    /// Overwrites the latency of the single direction `src -> dst`.
    pub fn set_link_latency(&mut self, src: NodeId, dst: NodeId, latency: f64) -> Result<()> {
        let e = self
            .find_link(src, dst)
            .ok_or_else(|| Error::config(format!("no link {src}->{dst}")))?;
        self.links[e].latency = latency;
        Ok(())
    }

    /// Number of weakly connected components (direction ignored).
    pub fn components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.n_nodes).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for l in &self.links {
            if l.src.0 >= self.n_nodes || l.dst.0 >= self.n_nodes {
                continue;
            }
            let a = find(&mut parent, l.src.0);
            let b = find(&mut parent, l.dst.0);
            if a != b {
                parent[a] = b;
            }
        }
        (0..self.n_nodes)
            .filter(|&x| find(&mut parent, x) == x)
            .count()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut seen = BTreeSet::new();
        for l in &self.links {
            if l.src.0 >= self.n_nodes || l.dst.0 >= self.n_nodes {
                report.errors.push(TopologyIssue::EndpointOutOfRange {
                    src: l.src,
                    dst: l.dst,
                });
            }
            if l.src == l.dst {
                report.errors.push(TopologyIssue::SelfLoop { node: l.src });
            }
            if !(l.latency > 0.0 && l.latency.is_finite()) {
                report.errors.push(TopologyIssue::NonPositiveLatency {
                    src: l.src,
                    dst: l.dst,
                    latency: l.latency,
                });
            }
            if !seen.insert((l.src, l.dst)) {
                report.errors.push(TopologyIssue::DuplicateLink {
                    src: l.src,
                    dst: l.dst,
                });
            }
        }
        for l in &self.links {
            if !seen.contains(&(l.dst, l.src)) {
                report.warnings.push(TopologyIssue::MissingReverse {
                    src: l.src,
                    dst: l.dst,
                });
            }
        }
        let components = self.components();
        if components > 1 {
            report
                .errors
                .push(TopologyIssue::Disconnected { components });
        }
        report
    }
}

fn bidirectional(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>, latency: f64) -> Topology {
    let mut links = Vec::new();
    for (a, b) in edges {
        links.push(Link {
            src: NodeId(a),
            dst: NodeId(b),
            latency,
        });
        links.push(Link {
            src: NodeId(b),
            dst: NodeId(a),
            latency,
        });
    }
    Topology::new(n_nodes, links)
}

fn clique(nodes: std::ops::Range<usize>) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for a in nodes.clone() {
        for b in (a + 1)..nodes.end {
            edges.push((a, b));
        }
    }
    edges
}

/// Generates one of the supported topologies with every direction set to
/// `default_latency`.
pub fn generate(kind: &TopologyKind, default_latency: f64) -> Result<Topology> {
    if !(default_latency > 0.0 && default_latency.is_finite()) {
        return Err(Error::config(format!(
            "default latency must be positive, got {default_latency}"
        )));
    }
    let topo = match kind {
        TopologyKind::Complete { n } => {
            if *n < 2 {
                return Err(Error::config(format!("complete graph needs n >= 2, got {n}")));
            }
            bidirectional(*n, clique(0..*n), default_latency)
        }
        TopologyKind::Hourglass => {
            let mut edges = clique(0..4);
            edges.extend(clique(4..8));
            edges.push((3, 4));
            bidirectional(8, edges, default_latency)
        }
        TopologyKind::Cube => {
            let edges = (0..8usize)
                .flat_map(|n| (0..3).map(move |b| (n, n ^ (1 << b))))
                .filter(|(a, b)| a < b);
            bidirectional(8, edges, default_latency)
        }
        TopologyKind::Torus { dims } => torus(dims, default_latency)?,
    };
    Ok(topo)
}

fn torus(dims: &[usize], latency: f64) -> Result<Topology> {
    if dims.is_empty() {
        return Err(Error::config("torus needs at least one dimension"));
    }
    if let Some(k) = dims.iter().find(|&&k| k < 2) {
        return Err(Error::config(format!("torus dimensions must be >= 2, got {k}")));
    }
    let n: usize = dims.iter().product();
    let mut strides = Vec::with_capacity(dims.len());
    let mut stride = 1;
    for &k in dims {
        strides.push(stride);
        stride *= k;
    }
    let mut edges = BTreeSet::new();
    for node in 0..n {
        for (&k, &stride) in dims.iter().zip(&strides) {
            let coord = (node / stride) % k;
            let next = node - coord * stride + ((coord + 1) % k) * stride;
            edges.insert((node.min(next), node.max(next)));
        }
    }
    Ok(bidirectional(n, edges, latency))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_counts() {
        let t = generate(&TopologyKind::Complete { n: 8 }, 10e-9).unwrap();
        assert_eq!(t.n_nodes(), 8);
        assert_eq!(t.links().len(), 56);
        let t = generate(&TopologyKind::Complete { n: 2 }, 10e-9).unwrap();
        assert_eq!(t.links().len(), 2);
        for n in 2..12 {
            let t = generate(&TopologyKind::Complete { n }, 1e-9).unwrap();
            assert_eq!(t.links().len(), n * (n - 1));
            for i in 0..n {
                assert_eq!(t.incoming(NodeId(i)).len(), n - 1);
                assert_eq!(t.links().iter().filter(|l| l.src.0 == i).count(), n - 1);
            }
        }
    }

    #[test]
    fn hourglass_and_cube_counts() {
        let h = generate(&TopologyKind::Hourglass, 1e-8).unwrap();
        assert_eq!(h.links().len(), 26);
        assert!(h.validate().is_ok());
        let c = generate(&TopologyKind::Cube, 1e-8).unwrap();
        assert_eq!(c.links().len(), 24);
        for i in 0..8 {
            assert_eq!(c.peers(NodeId(i)).len(), 3);
        }
    }

    #[test]
    fn hourglass_bridge_removal_splits_in_two() {
        let h = generate(&TopologyKind::Hourglass, 1e-8).unwrap();
        let links: Vec<Link> = h
            .links()
            .iter()
            .copied()
            .filter(|l| !((l.src.0 < 4) ^ (l.dst.0 < 4)))
            .collect();
        assert_eq!(links.len(), 24);
        let cut = Topology::new(8, links);
        assert_eq!(cut.components(), 2);
        let report = cut.validate();
        assert_eq!(
            report.errors,
            vec![TopologyIssue::Disconnected { components: 2 }]
        );
    }

    #[test]
    fn torus_degrees() {
        let t = generate(&TopologyKind::Torus { dims: vec![3, 4, 5] }, 1e-8).unwrap();
        assert_eq!(t.links().len(), 2 * 3 * 60);
        for i in 0..60 {
            assert_eq!(t.peers(NodeId(i)).len(), 6);
        }
        // k = 2 deduplicates the wrap-around edge.
        let t = generate(&TopologyKind::Torus { dims: vec![2, 2, 2] }, 1e-8).unwrap();
        assert_eq!(t.links().len(), 24);
        let t = generate(&TopologyKind::Torus { dims: vec![2, 5] }, 1e-8).unwrap();
        assert_eq!(t.links().len(), 10 + 20);
    }

    #[test]
    fn torus_22_cubed_matches_enumeration() {
        let dims = [22usize, 22, 22];
        let t = generate(&TopologyKind::Torus { dims: dims.to_vec() }, 10e-9).unwrap();
        assert_eq!(t.n_nodes(), 10648);
        // Brute force: two nodes are adjacent iff their coordinates differ by
        // +-1 (mod k) in exactly one dimension.
        let coords = |x: usize| [x % 22, (x / 22) % 22, x / 484];
        let mut count = 0usize;
        for a in 0..10648 {
            let ca = coords(a);
            for b in 0..10648 {
                let cb = coords(b);
                let mut diff = 0;
                let mut adjacent = true;
                for d in 0..3 {
                    if ca[d] != cb[d] {
                        diff += 1;
                        let k = dims[d];
                        if (ca[d] + 1) % k != cb[d] && (cb[d] + 1) % k != ca[d] {
                            adjacent = false;
                        }
                    }
                }
                if diff == 1 && adjacent {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 63888);
        assert_eq!(t.links().len(), count);
    }

    #[test]
    fn generator_errors() {
        assert!(generate(&TopologyKind::Complete { n: 1 }, 1e-8).is_err());
        assert!(generate(&TopologyKind::Torus { dims: vec![] }, 1e-8).is_err());
        assert!(generate(&TopologyKind::Torus { dims: vec![4, 1] }, 1e-8).is_err());
        assert!(generate(&TopologyKind::Cube, 0.0).is_err());
    }

    #[test]
    fn set_latency_touches_one_direction() {
        let mut t = generate(&TopologyKind::Complete { n: 8 }, 10e-9).unwrap();
        let before = t.clone();
        t.set_link_latency(NodeId(0), NodeId(2), 10e-6).unwrap();
        let fwd = t.find_link(NodeId(0), NodeId(2)).unwrap();
        let rev = t.find_link(NodeId(2), NodeId(0)).unwrap();
        assert_eq!(t.links()[fwd].latency, 10e-6);
        assert_eq!(t.links()[rev].latency, 10e-9);
        let changed = t
            .links()
            .iter()
            .zip(before.links())
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(changed, 1);

        let mut same = before.clone();
        same.set_link_latency(NodeId(0), NodeId(1), 10e-9).unwrap();
        assert_eq!(same, before);

        let mut bad = generate(&TopologyKind::Hourglass, 1e-8).unwrap();
        assert!(matches!(
            bad.set_link_latency(NodeId(0), NodeId(7), 1e-6),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn validate_reports() {
        let t = generate(&TopologyKind::Complete { n: 8 }, 10e-9).unwrap();
        assert!(t.validate().is_ok());
        assert!(t.validate().warnings.is_empty());

        let mut z = t.clone();
        z.set_link_latency(NodeId(1), NodeId(2), 0.0).unwrap();
        let r = z.validate();
        assert!(matches!(
            r.errors.as_slice(),
            [TopologyIssue::NonPositiveLatency { .. }]
        ));

        let one_way = Topology::new(
            2,
            vec![Link {
                src: NodeId(0),
                dst: NodeId(1),
                latency: 1e-8,
            }],
        );
        let r = one_way.validate();
        assert!(r.is_ok());
        assert_eq!(r.warnings.len(), 1);

        let looped = Topology::new(
            1,
            vec![Link {
                src: NodeId(0),
                dst: NodeId(0),
                latency: 1e-8,
            }],
        );
        assert!(looped
            .validate()
            .errors
            .contains(&TopologyIssue::SelfLoop { node: NodeId(0) }));
    }

    #[test]
    fn fiber_calibration() {
        let l = fiber_latency(2000.0, FIBER_SPEED_MPS);
        assert!((l * 125e6 - 1231.0).abs() < 1e-9);
    }
}
