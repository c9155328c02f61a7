mod common;

use proptest::prelude::*;
use treebench_core::graph::Graph;
use treebench_core::hyperboloid::{
    average_distortion, distance, exp_map, lift_feature, log_map, minkowski_inner, origin, tree_embed, tripod_embed,
    tripod_leaf_distance, Curvature, HPoint, TangentVec,
};
use treebench_core::treegen::{generate_graph, TreeParams};

/// `|K| ∈ [1e-3, 1e3]`, log-uniform.
fn curvature() -> impl Strategy<Value = Curvature> {
    (-3.0f64..3.0).prop_map(|e| Curvature::new(-(10f64.powf(e))).unwrap())
}

fn case() -> impl Strategy<Value = (Curvature, HPoint, TangentVec)> {
    (
        curvature(),
        1usize..=4,
        proptest::collection::vec(-1.0f64..1.0, 5),
        proptest::collection::vec(-1.0f64..1.0, 5),
        0.0f64..1.0,
        0.0f64..1.0,
    )
        .prop_map(|(k, n, a, b, ra, rb)| {
            let reach = common::tangent_reach(k);
            let o = origin(n, k);
            let x = exp_map(&common::transported_tangent(&o, k, &a, 0.5 * ra * reach), k);
            let v = common::transported_tangent(&x, k, &b, rb * reach);
            (k, x, v)
        })
}

fn scale(p: &[f64]) -> f64 {
    p.iter().fold(1.0f64, |m, c| m.max(c.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn exp_stays_on_manifold((k, _x, v) in case()) {
        let y = exp_map(&v, k);
        let lhs = k.value() * minkowski_inner(y.coords(), y.coords()).unwrap();
        prop_assert!((lhs - 1.0).abs() <= 1e-9 * (k.value().abs() * y.coords()[0].powi(2)).max(1.0), "{}", lhs);
        prop_assert!(y.coords()[0] > 0.0);
        prop_assert!(HPoint::new(y.coords().to_vec(), k).is_ok());
    }

    #[test]
    fn log_inverts_exp((k, x, v) in case()) {
        let y = exp_map(&v, k);
        let back = log_map(&x, &y, k).unwrap();
        let tol = 1e-8 * scale(v.components()).max(scale(x.coords()));
        for (a, b) in back.components().iter().zip(v.components()) {
            prop_assert!((a - b).abs() <= tol, "{:?} vs {:?}", back.components(), v.components());
        }
    }

    #[test]
    fn radial_distance_is_preserved((k, x, v) in case()) {
        let y = exp_map(&v, k);
        let d = distance(&x, &y, k).unwrap();
        prop_assert!((d - v.norm()).abs() <= 1e-8 * v.norm().max(1.0), "{} vs {}", d, v.norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn distance_is_a_metric((k, x, v) in case(), w in proptest::collection::vec(-1.0f64..1.0, 5), r in 0.0f64..1.0) {
        let y = exp_map(&v, k);
        let reach = common::tangent_reach(k);
        let z = exp_map(&common::transported_tangent(&y, k, &w, r * reach), k);
        let (xy, yz, xz) = (distance(&x, &y, k).unwrap(), distance(&y, &z, k).unwrap(), distance(&x, &z, k).unwrap());
        prop_assert!((xy - distance(&y, &x, k).unwrap()).abs() <= 1e-9 * xy.max(1.0));
        prop_assert!(xz <= xy + yz + 1e-9 * (xy + yz).max(1.0));
        prop_assert!(distance(&x, &x, k).unwrap().abs() < 1e-9);
    }

    #[test]
    fn lifted_features_are_on_manifold(xe in proptest::collection::vec(-1.0f64..1.0, 1..6), r in 0.0f64..10.0, k in curvature()) {
        let n = xe.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-300);
        let xe: Vec<f64> = xe.iter().map(|a| a * r.min(r / k.sqrt_abs()) / n).collect();
        let x = lift_feature(&xe, k).unwrap();
        prop_assert!(HPoint::new(x.coords().to_vec(), k).is_ok());
    }
}

#[test]
fn tripod_distance_limits() {
    let flat = Curvature::new(-1e-6).unwrap();
    assert!((tripod_leaf_distance(flat) - 3f64.sqrt()).abs() < 1e-3);
    for kv in [100.0f64, 10_000.0] {
        let k = Curvature::new(-kv).unwrap();
        let expected = 2.0 + 0.75f64.ln() / kv.sqrt();
        assert!((tripod_leaf_distance(k) - expected).abs() < 1e-6);
        let pts = tripod_embed(k);
        assert!((distance(&pts[1], &pts[2], k).unwrap() - expected).abs() < 1e-6);
    }
    let k1 = Curvature::new(-1.0).unwrap();
    assert!((tripod_leaf_distance(k1) - 1.7878).abs() < 1e-4);
    let grid: Vec<f64> = (0..20).map(|i| tripod_leaf_distance(Curvature::new(-(10f64.powf(-6.0 + 0.5 * i as f64))).unwrap())).collect();
    assert!(grid.windows(2).all(|w| w[0] < w[1]));
    assert!(grid.iter().all(|&d| d > 3f64.sqrt() - 1e-3 && d < 2.0));
}

#[test]
fn distortion_falls_with_edge_scale() {
    let g = generate_graph(&TreeParams { b: 3, levels: 3, gamma: 0.0, delta: 1.0, dim: 1, seed: 0 }).unwrap();
    let k = Curvature::new(-1.0).unwrap();
    let dist: Vec<f64> = [0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&tau| average_distortion(&g, &tree_embed(&g, k, tau).unwrap().points, k, tau).unwrap())
        .collect();
    assert!(dist.windows(2).all(|w| w[1] < w[0]), "{dist:?}");
}

#[test]
fn embedded_edges_have_length_tau() {
    let g = Graph::from_edge_list(&[(0, 1), (1, 2), (1, 3), (3, 4), (0, 5)]).unwrap();
    let k = Curvature::new(-0.5).unwrap();
    let e = tree_embed(&g, k, 1.5).unwrap();
    for &(u, v) in g.edges() {
        assert!((distance(&e.points[u], &e.points[v], k).unwrap() - 1.5).abs() < 1e-9);
    }
}
