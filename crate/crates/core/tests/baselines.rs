mod common;

use proptest::prelude::*;
use treebench_core::baselines::{
    fermi_dirac, loss_and_grad, roc_auc, train_link_predictor, BaselineError, Encoder, FermiDiracParams, Model,
    ModelConfig, NormalizedAdjacency,
};
use treebench_core::treegen::{generate_dataset, make_splits, TreeParams, DEFAULT_FRACS};

fn check_gradient(m: &Model, x: &ndarray::Array2<f64>, adj: Option<&NormalizedAdjacency>) {
    let worst = common::gradient_mismatch(m, x, adj);
    assert!(worst <= 1e-5, "relative mismatch {worst}");
}

#[test]
fn mlp_gradient_matches_finite_differences() {
    for seed in 0..3 {
        check_gradient(&common::fixture_model(Encoder::Mlp, Some(4), seed), &common::fixture_features(seed), None);
        check_gradient(&common::fixture_model(Encoder::Mlp, None, seed), &common::fixture_features(seed), None);
    }
}

#[test]
fn gcn_gradient_matches_finite_differences() {
    let adj = NormalizedAdjacency::from_edges(10, &common::FIXTURE_EDGES).unwrap();
    for seed in 0..3 {
        check_gradient(&common::fixture_model(Encoder::Gcn, Some(4), seed), &common::fixture_features(seed), Some(&adj));
        check_gradient(&common::fixture_model(Encoder::Gcn, None, seed), &common::fixture_features(seed), Some(&adj));
    }
}

#[test]
fn clamped_pairs_contribute_no_gradient() {
    let mut m = common::fixture_model(Encoder::Mlp, Some(4), 1);
    m.r = -100.0;
    m.clamp_max = 5.0;
    let (loss, g) = loss_and_grad(&m, &common::fixture_features(1), None, &common::FIXTURE_EDGES, &common::FIXTURE_NEG).unwrap();
    assert!(loss.is_finite());
    assert!(g.iter().all(|&v| v == 0.0));
}

#[test]
fn fermi_dirac_is_monotone_bounded_and_clamped() {
    let p = FermiDiracParams::default();
    let ds: Vec<f64> = (0..400).map(|i| i as f64 * 0.1).collect();
    let v: Vec<f64> = ds.iter().map(|&d| fermi_dirac(d, &p)).collect();
    assert!(v.iter().all(|&s| s > 0.0 && s < 1.0));
    assert!(v.windows(2).all(|w| w[1] <= w[0]));
    let edge = p.r + p.t * p.clamp_max;
    let floor = fermi_dirac(edge, &p);
    assert!(ds.iter().filter(|&&d| d >= edge).all(|&d| fermi_dirac(d, &p) == floor));
    assert!((fermi_dirac(p.r, &p) - 0.5).abs() < 1e-15);
    assert!(fermi_dirac(1e300, &p) > 0.0);
}

fn brute_auc(scores: &[(f64, bool)]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for &(a, pa) in scores {
        for &(b, pb) in scores {
            if pa && !pb {
                den += 1.0;
                num += if a > b { 1.0 } else if a == b { 0.5 } else { 0.0 };
            }
        }
    }
    num / den
}

proptest! {
    #[test]
    fn auc_matches_pair_counting(scores in proptest::collection::vec((0u8..6, any::<bool>()), 2..=20)) {
        let scores: Vec<(f64, bool)> = scores.into_iter().map(|(s, l)| (f64::from(s), l)).collect();
        let has_both = scores.iter().any(|s| s.1) && scores.iter().any(|s| !s.1);
        match roc_auc(&scores) {
            Ok(a) => {
                prop_assert!(has_both);
                prop_assert!((a - brute_auc(&scores)).abs() < 1e-12);
            }
            Err(e) => {
                prop_assert!(!has_both);
                prop_assert!(matches!(e, BaselineError::SingleClass));
            }
        }
    }
}

#[test]
fn auc_rejects_non_finite_scores() {
    assert!(matches!(roc_auc(&[(f64::NAN, true), (0.0, false)]), Err(BaselineError::NonFiniteScore)));
}

#[test]
fn training_is_bit_reproducible() {
    let ds = generate_dataset(&TreeParams { b: 3, levels: 4, gamma: 0.5, delta: 1.0, dim: 16, seed: 2 }).unwrap();
    let sp = make_splits(&ds.graph, DEFAULT_FRACS, 5).unwrap();
    for encoder in [Encoder::Mlp, Encoder::Gcn] {
        let cfg = ModelConfig {
            encoder,
            hidden_dims: vec![16],
            embed_dim: Some(8),
            dropout: 0.2,
            epochs: 15,
            seed: 3,
            ..ModelConfig::default()
        };
        let a = train_link_predictor(&ds, &sp, &cfg, &FermiDiracParams::default()).unwrap();
        let b = train_link_predictor(&ds, &sp, &cfg, &FermiDiracParams::default()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.per_epoch.len() <= 15 && a.best_epoch < a.per_epoch.len());
        assert!((0.0..=1.0).contains(&a.test_auc));
        let c = train_link_predictor(&ds, &sp, &ModelConfig { seed: 4, ..cfg }, &FermiDiracParams::default()).unwrap();
        assert_ne!(a.per_epoch, c.per_epoch);
    }
}

#[test]
fn invalid_splits_are_rejected() {
    let ds = generate_dataset(&TreeParams { b: 3, levels: 3, gamma: 0.0, delta: 1.0, dim: 4, seed: 2 }).unwrap();
    let mut sp = make_splits(&ds.graph, DEFAULT_FRACS, 5).unwrap();
    sp.val_neg[0] = sp.train_pos[0];
    let r = train_link_predictor(&ds, &sp, &ModelConfig::default(), &FermiDiracParams::default());
    assert!(matches!(r, Err(BaselineError::InvalidSplits(_))));
}
