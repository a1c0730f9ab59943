// SPDX-License-Identifier: Apache-2.0

use bittide_core::topology::{generate, NodeId, TopologyKind, DEFAULT_LINK_LATENCY};
use proptest::prelude::*;

proptest! {
    #[test]
    fn generated_complete_graphs_validate(n in 2usize..40) {
        let t = generate(&TopologyKind::Complete { n }, DEFAULT_LINK_LATENCY).unwrap();
        prop_assert!(t.validate().is_ok());
        prop_assert!(t.validate().warnings.is_empty());
        prop_assert_eq!(t.links().len(), n * (n - 1));
        for i in 0..n {
            prop_assert_eq!(t.incoming(NodeId(i)).len(), n - 1);
            prop_assert_eq!(t.links().iter().filter(|l| l.src == NodeId(i)).count(), n - 1);
        }
    }

    #[test]
    fn generated_tori_validate(dims in prop::collection::vec(2usize..7, 1..4)) {
        let t = generate(&TopologyKind::Torus { dims: dims.clone() }, DEFAULT_LINK_LATENCY).unwrap();
        prop_assert!(t.validate().is_ok());
        let nodes: usize = dims.iter().product();
        prop_assert_eq!(t.n_nodes(), nodes);
        let neighbours: usize = dims.iter().map(|&k| if k == 2 { 1 } else { 2 }).sum();
        prop_assert_eq!(t.links().len(), nodes * neighbours);
        for i in 0..nodes {
            prop_assert_eq!(t.peers(NodeId(i)).len(), neighbours);
        }
    }

    #[test]
    fn latency_override_touches_one_direction(n in 2usize..10, a in 0usize..10, b in 0usize..10, lat in 1e-9f64..1e-4) {
        prop_assume!(a < n && b < n && a != b);
        let mut t = generate(&TopologyKind::Complete { n }, DEFAULT_LINK_LATENCY).unwrap();
        let before = t.clone();
        t.set_link_latency(NodeId(a), NodeId(b), lat).unwrap();
        for (e, (x, y)) in t.links().iter().zip(before.links()).enumerate() {
            if Some(e) == t.find_link(NodeId(a), NodeId(b)) {
                prop_assert_eq!(x.latency, lat);
            } else {
                prop_assert_eq!(x, y);
            }
        }
    }
}

#[test]
fn fixed_shapes_validate() {
    for kind in [TopologyKind::Hourglass, TopologyKind::Cube] {
        let t = generate(&kind, DEFAULT_LINK_LATENCY).unwrap();
        assert!(t.validate().is_ok(), "{kind}");
        assert_eq!(t.components(), 1);
    }
}
