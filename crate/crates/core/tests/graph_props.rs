use gnncomm::env::{DeviceKind, DeviceState, Position, ScenarioConfig};
use gnncomm::graph::{build_graph, normalized_adjacency, sample_neighbors, CommGraph, Edge, EdgeKind, Node, NodeKind, SampleSpec, StructureKind};
use gnncomm::rng::SimRng;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

/// χ² critical value, 9 degrees of freedom, α = 0.01.
const CHI2_9DOF_ALPHA_001: f64 = 21.666;

fn devices(n_ap: usize, n_ue: usize, rng: &mut SimRng) -> Vec<DeviceState> {
    (0..n_ap + n_ue)
        .map(|id| DeviceState {
            id,
            kind: if id < n_ap {
                [DeviceKind::StaticAp, DeviceKind::VehicleAp, DeviceKind::UavAp][id % 3]
            } else {
                DeviceKind::Ue
            },
            position: Position::new(rng.random_range(0.0..500.0), rng.random_range(0.0..500.0)),
        })
        .collect()
}

fn edge_set(g: &CommGraph) -> std::collections::BTreeSet<Edge> {
    g.edges.iter().copied().collect()
}

#[test]
fn sampling_is_uniform_chi_square() {
    // star: node 0 with ten neighbors
    let nodes: Vec<Node> = (0..11).map(|id| Node { id, kind: NodeKind::Device(DeviceKind::Ue), layer: 0 }).collect();
    let edges: Vec<Edge> = (1..11)
        .flat_map(|j| [Edge { src: 0, dst: j, kind: EdgeKind::UeUe }, Edge { src: j, dst: 0, kind: EdgeKind::UeUe }])
        .collect();
    let g = CommGraph::new(nodes, edges).unwrap();
    let spec = SampleSpec::new(3).unwrap();
    let mut rng = SimRng::seed_from_u64(99);
    let draws = 10_000;
    let mut counts = [0usize; 11];
    for _ in 0..draws {
        let s = sample_neighbors(&g, 0, spec, &mut rng).unwrap();
        assert_eq!(s.len(), 3);
        let mut d = s.clone();
        d.sort_unstable();
        d.dedup();
        assert_eq!(d.len(), 3, "sampled with replacement");
        for j in s {
            counts[j] += 1;
        }
    }
    let expected = draws as f64 * 3.0 / 10.0;
    let chi2: f64 = counts[1..].iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    assert!(chi2 < CHI2_9DOF_ALPHA_001, "chi2 = {chi2}");
}

#[test]
fn two_aps_talk_only_in_heterogeneous() {
    let cfg = ScenarioConfig::default();
    let devs = vec![
        DeviceState { id: 0, kind: DeviceKind::VehicleAp, position: Position::new(0.0, 0.0) },
        DeviceState { id: 1, kind: DeviceKind::UavAp, position: Position::new(100.0, 0.0) },
        DeviceState { id: 2, kind: DeviceKind::Ue, position: Position::new(400.0, 400.0) },
    ];
    let count = |s| {
        build_graph(&devs, s, &cfg).unwrap().edges.iter().filter(|e| e.kind == EdgeKind::ApAp).count()
    };
    assert_eq!(count(StructureKind::Bipartite), 0);
    assert_eq!(count(StructureKind::Heterogeneous), 2);
}

#[test]
fn hierarchical_hub_links_every_ap() {
    let cfg = ScenarioConfig::default();
    let devs = vec![
        DeviceState { id: 0, kind: DeviceKind::StaticAp, position: Position::new(0.0, 0.0) },
        DeviceState { id: 1, kind: DeviceKind::VehicleAp, position: Position::new(500.0, 0.0) },
        DeviceState { id: 2, kind: DeviceKind::UavAp, position: Position::new(0.0, 500.0) },
        DeviceState { id: 3, kind: DeviceKind::Ue, position: Position::new(250.0, 250.0) },
    ];
    let g = build_graph(&devs, StructureKind::Hierarchical, &cfg).unwrap();
    assert_eq!(g.hub(), Some(4));
    assert_eq!(g.edges.iter().filter(|e| e.kind == EdgeKind::ApHub).count(), 6);
    assert_eq!(g.nodes[4].layer, 2);
    assert!(g.edges.iter().all(|e| e.kind != EdgeKind::UeUe && e.kind != EdgeKind::ApAp));
}

#[test]
fn unknown_structure_tag_is_rejected() {
    assert!("ring".parse::<StructureKind>().is_err());
    for s in StructureKind::ALL {
        assert_eq!(s.as_str().parse::<StructureKind>().unwrap(), s);
    }
}

#[test]
fn edge_list_export_has_one_line_per_edge() {
    let mut rng = SimRng::seed_from_u64(3);
    let g = build_graph(&devices(3, 5, &mut rng), StructureKind::Heterogeneous, &ScenarioConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("edges.txt");
    g.export_edge_list(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), g.edge_count());
    for line in text.lines() {
        assert_eq!(line.split(',').count(), 3);
    }
}

proptest! {
    #[test]
    fn edges_come_in_mirrored_pairs(seed in any::<u64>(), n_ap in 1usize..5, n_ue in 0usize..8) {
        let mut rng = SimRng::seed_from_u64(seed);
        let devs = devices(n_ap, n_ue, &mut rng);
        for s in StructureKind::ALL {
            let g = build_graph(&devs, s, &ScenarioConfig::default()).unwrap();
            let set = edge_set(&g);
            prop_assert_eq!(set.len(), g.edge_count());
            for e in &g.edges {
                prop_assert!(e.src != e.dst);
                let mirror = Edge { src: e.dst, dst: e.src, kind: e.kind };
                prop_assert!(set.contains(&mirror));
            }
        }
    }

    #[test]
    fn growing_a_radius_never_removes_an_edge(seed in any::<u64>(), extra in 0.0f64..300.0) {
        let mut rng = SimRng::seed_from_u64(seed);
        let devs = devices(3, 6, &mut rng);
        let small = ScenarioConfig::default();
        let big = ScenarioConfig {
            radius_ap_ap_m: small.radius_ap_ap_m + extra,
            radius_ap_ue_m: small.radius_ap_ue_m + extra,
            radius_ue_ue_m: small.radius_ue_ue_m + extra,
            ..small.clone()
        };
        for s in StructureKind::ALL {
            let a = edge_set(&build_graph(&devs, s, &small).unwrap());
            let b = edge_set(&build_graph(&devs, s, &big).unwrap());
            prop_assert!(a.is_subset(&b));
        }
    }

    #[test]
    fn bipartite_is_a_subset_of_heterogeneous(seed in any::<u64>()) {
        let mut rng = SimRng::seed_from_u64(seed);
        let devs = devices(4, 8, &mut rng);
        let cfg = ScenarioConfig::default();
        let b = edge_set(&build_graph(&devs, StructureKind::Bipartite, &cfg).unwrap());
        let h = edge_set(&build_graph(&devs, StructureKind::Heterogeneous, &cfg).unwrap());
        prop_assert!(b.is_subset(&h));
    }

    #[test]
    fn normalized_adjacency_is_symmetric(seed in any::<u64>()) {
        let mut rng = SimRng::seed_from_u64(seed);
        let devs = devices(3, 6, &mut rng);
        let g = build_graph(&devs, StructureKind::Heterogeneous, &ScenarioConfig::default()).unwrap();
        let subset: Vec<usize> = (0..g.node_count()).collect();
        let a = normalized_adjacency(&g, &subset).unwrap();
        for i in 0..subset.len() {
            if g.neighbors(i).is_empty() {
                prop_assert_eq!(a[(i, i)], 1.0);
            }
            for j in 0..subset.len() {
                prop_assert!((a[(i, j)] - a[(j, i)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sample_size_is_min_of_degree_and_k(seed in any::<u64>(), k in 1usize..6) {
        let mut rng = SimRng::seed_from_u64(seed);
        let devs = devices(3, 8, &mut rng);
        let g = build_graph(&devs, StructureKind::Heterogeneous, &ScenarioConfig::default()).unwrap();
        let spec = SampleSpec::new(k).unwrap();
        for n in 0..g.node_count() {
            let s = sample_neighbors(&g, n, spec, &mut rng).unwrap();
            prop_assert_eq!(s.len(), g.neighbors(n).len().min(k));
            prop_assert!(s.iter().all(|j| g.neighbors(n).contains(j)));
        }
    }
}
