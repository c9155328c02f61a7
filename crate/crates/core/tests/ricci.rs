mod common;

use proptest::prelude::*;
use treebench_core::graph::{apsp, Graph};
use treebench_core::ricci::{
    curvature_profile, curvature_profile_local, edge_curvature, neighbor_measure, transport, transport_distance, NodeMeasure,
    RicciError, DEFAULT_BIN_WIDTH,
};

fn oracle_kappa(g: &Graph, fw: &[Vec<u32>], x: usize, y: usize) -> f64 {
    let (nx, ny) = (g.neighbors(x), g.neighbors(y));
    let cost: Vec<u32> = nx.iter().flat_map(|&a| ny.iter().map(move |&b| fw[a][b])).collect();
    1.0 - common::uniform_transport_oracle(nx.len(), ny.len(), &cost) / f64::from(fw[x][y])
}

fn measure(support: Vec<usize>, weights: Vec<f64>) -> NodeMeasure {
    let total: f64 = weights.iter().sum();
    let mut mass: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let drift: f64 = 1.0 - mass.iter().sum::<f64>();
    mass[0] += drift;
    NodeMeasure::new(support, mass).unwrap()
}

fn random_measure(n: usize) -> impl Strategy<Value = NodeMeasure> {
    (Just((0..n).collect::<Vec<usize>>()).prop_shuffle(), 1..=n.min(4))
        .prop_flat_map(|(perm, k)| (Just(perm[..k].to_vec()), proptest::collection::vec(1u32..20, k)))
        .prop_map(|(support, w)| measure(support, w.into_iter().map(f64::from).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn curvature_matches_min_cost_flow((n, edges) in common::connected_graph(10)) {
        let g = common::build(n, &edges);
        let d = apsp(&g).unwrap();
        let fw = common::floyd_warshall(n, g.edges());
        for &(x, y) in g.edges() {
            let k = edge_curvature(&g, &d, x, y).unwrap();
            prop_assert!((k.kappa - oracle_kappa(&g, &fw, x, y)).abs() < 1e-9);
            prop_assert!(k.kappa <= 1.0 + 1e-12);
            prop_assert!((k.kappa - (1.0 - k.transport_cost)).abs() < 1e-15);
        }
    }

    #[test]
    fn solver_matches_basis_enumeration(
        supply in proptest::collection::vec(1u32..10, 1..=3),
        demand in proptest::collection::vec(1u32..10, 1..=4),
        cost in proptest::collection::vec(0u32..5, 12),
    ) {
        let s: f64 = supply.iter().map(|&v| f64::from(v)).sum();
        let t: f64 = demand.iter().map(|&v| f64::from(v)).sum();
        let supply: Vec<f64> = supply.iter().map(|&v| f64::from(v) / s).collect();
        let mut demand: Vec<f64> = demand.iter().map(|&v| f64::from(v) / t).collect();
        let fix = supply.iter().sum::<f64>() - demand.iter().sum::<f64>();
        demand[0] += fix;
        let cost: Vec<f64> = cost[..supply.len() * demand.len()].iter().map(|&c| f64::from(c)).collect();
        let plan = transport::solve(&supply, &demand, &cost).unwrap();
        let oracle = common::basic_feasible_oracle(&supply, &demand, &cost);
        prop_assert!((plan.cost - oracle).abs() < 1e-9, "{} vs {}", plan.cost, oracle);
        let m = demand.len();
        for (i, &s) in supply.iter().enumerate() {
            let row: f64 = plan.flow[i * m..(i + 1) * m].iter().sum();
            prop_assert!((row - s).abs() < 1e-9);
        }
        prop_assert!(plan.flow.iter().all(|&f| f >= -1e-12));
    }

    #[test]
    fn transport_is_a_metric(
        ((n, edges), a, b, c) in common::connected_graph(8)
            .prop_flat_map(|(n, e)| (Just((n, e)), random_measure(n), random_measure(n), random_measure(n)))
    ) {
        let g = common::build(n, &edges);
        let d = apsp(&g).unwrap();
        let ab = transport_distance(&d, &a, &b).unwrap();
        let ba = transport_distance(&d, &b, &a).unwrap();
        let ac = transport_distance(&d, &a, &c).unwrap();
        let cb = transport_distance(&d, &c, &b).unwrap();
        prop_assert!((ab - ba).abs() < 1e-9);
        prop_assert!(ab <= ac + cb + 1e-9);
        prop_assert!(transport_distance(&d, &a, &a).unwrap().abs() < 1e-12);
        let key = |m: &NodeMeasure| {
            let mut k: Vec<(usize, u64)> = m.support().iter().zip(m.mass()).map(|(&s, &w)| (s, (w * 1e9).round() as u64)).collect();
            k.sort_unstable();
            k
        };
        if key(&a) != key(&b) {
            prop_assert!(ab > 1e-9);
        }
    }

    #[test]
    fn tree_edges_follow_degree_formula((n, edges) in common::tree(30)) {
        let g = common::build(n, &edges);
        let d = apsp(&g).unwrap();
        for &(x, y) in g.edges() {
            let (dx, dy) = (g.degree(x) as f64, g.degree(y) as f64);
            let expected = -2.0 * (1.0 - 1.0 / dx - 1.0 / dy).max(0.0);
            let k = edge_curvature(&g, &d, x, y).unwrap();
            prop_assert!((k.kappa - expected).abs() < 1e-9, "deg {} {}: {} vs {}", dx, dy, k.kappa, expected);
            // every leaf-side mass must move at least one hop
            prop_assert!(k.transport_cost >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn profile_is_invariant_under_relabelling((n, edges) in common::connected_graph(10), perm in Just((0..10).collect::<Vec<usize>>()).prop_shuffle()) {
        let g = common::build(n, &edges);
        let perm: Vec<usize> = perm.into_iter().filter(|&i| i < n).collect();
        let h = Graph::with_nodes(n, &g.edges().iter().map(|&(u, v)| (perm[u], perm[v])).collect::<Vec<_>>()).unwrap();
        let pg = curvature_profile(&g, &apsp(&g).unwrap(), DEFAULT_BIN_WIDTH).unwrap();
        let ph = curvature_profile(&h, &apsp(&h).unwrap(), DEFAULT_BIN_WIDTH).unwrap();
        for e in &pg.edges {
            let (u, v) = (perm[e.edge.0], perm[e.edge.1]);
            let mapped = ph.edges.iter().find(|f| f.edge == (u.min(v), u.max(v))).unwrap();
            prop_assert!((mapped.kappa - e.kappa).abs() < 1e-12);
        }
        prop_assert_eq!(pg.histogram, ph.histogram);
    }

    #[test]
    fn local_distances_agree_with_dense((n, edges) in common::connected_graph(10)) {
        let g = common::build(n, &edges);
        let dense = curvature_profile(&g, &apsp(&g).unwrap(), DEFAULT_BIN_WIDTH).unwrap();
        let local = curvature_profile_local(&g, DEFAULT_BIN_WIDTH).unwrap();
        for (a, b) in dense.edges.iter().zip(&local.edges) {
            prop_assert_eq!(a.edge, b.edge);
            prop_assert!((a.kappa - b.kappa).abs() < 1e-12);
        }
    }
}

#[test]
fn reference_values() {
    let p2 = Graph::from_edge_list(&[(0, 1)]).unwrap();
    let d = apsp(&p2).unwrap();
    assert_eq!(edge_curvature(&p2, &d, 0, 1).unwrap().kappa, 0.0);
    let a = NodeMeasure::new(vec![1], vec![1.0]).unwrap();
    let b = NodeMeasure::new(vec![0], vec![1.0]).unwrap();
    assert_eq!(transport_distance(&d, &a, &b).unwrap(), 1.0);

    let k3 = Graph::from_edge_list(&[(0, 1), (1, 2), (0, 2)]).unwrap();
    let d = apsp(&k3).unwrap();
    let t = transport_distance(&d, &neighbor_measure(&k3, 0), &neighbor_measure(&k3, 1)).unwrap();
    assert!((t - 0.5).abs() < 1e-12);
    let prof = curvature_profile(&k3, &d, DEFAULT_BIN_WIDTH).unwrap();
    assert!(prof.kappas().iter().all(|k| (k - 0.5).abs() < 1e-12));

    let tripod = Graph::from_edge_list(&[(0, 1), (0, 2), (0, 3)]).unwrap();
    let d = apsp(&tripod).unwrap();
    let prof = curvature_profile(&tripod, &d, DEFAULT_BIN_WIDTH).unwrap();
    assert!(prof.kappas().iter().all(|k| k.abs() < 1e-12));
    let occupied: Vec<_> = prof.histogram.bins.iter().filter(|b| b.count > 0).collect();
    assert_eq!(occupied.len(), 1);
    assert_eq!((occupied[0].bin_left, occupied[0].count), (0.0, 3));
    assert_eq!(neighbor_measure(&tripod, 0).mass(), &[1.0 / 3.0; 3]);
    assert!(matches!(edge_curvature(&tripod, &d, 1, 2), Err(RicciError::NotAnEdge(1, 2))));
}
