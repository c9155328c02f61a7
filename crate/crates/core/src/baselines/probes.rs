//! Initialisation-time Monte-Carlo probes for attention and mean
//! aggregation over i.i.d. Gaussian node features.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::BaselineError;
use crate::graph::Graph;
use crate::rng;

/// Output width of the probed attention layer.
pub const GAT_OUT_DIM: usize = 16;
const LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionStats {
    pub node: usize,
    pub degree: usize,
    pub neighbors: Vec<usize>,
    /// Monte-Carlo mean of `α_ij` for each neighbour.
    pub mean_alpha: Vec<f64>,
    /// `max_j |mean α_ij − 1/|N_i||`.
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationStats {
    pub node: usize,
    pub degree: usize,
    /// Empirical variance of the mean-aggregated feature, averaged over
    /// coordinates.
    pub variance: f64,
    /// `variance · |N_i|`; 1 when the variance equals `1/|N_i|`.
    pub ratio: f64,
}

fn check(g: &Graph, nodes: &[usize], dim: usize, trials: usize) -> Result<(), BaselineError> {
    if trials == 0 || dim == 0 {
        return Err(BaselineError::InvalidConfig("trials and dim must be at least 1".into()));
    }
    if let Some(&bad) = nodes.iter().find(|&&i| i >= g.num_nodes()) {
        return Err(BaselineError::ShapeMismatch(format!("node {bad} outside the graph")));
    }
    Ok(())
}

fn gaussian_row(seed: u64, trial: usize, node: usize, dim: usize) -> Array1<f64> {
    let mut r = rng::stream(rng::derive_seed(seed, trial as u64), node as u64);
    Array1::from_shape_simple_fn(dim, || StandardNormal.sample(&mut r))
}

/// Mean attention weights of a single-head attention layer at random
/// initialisation.
///
/// Per trial: fresh `N(0, I_dim)` features, `W` (`16 × dim`) and `a`
/// (`32`) drawn uniformly with Glorot bounds, and
/// `α_ij = softmax_{j ∈ N(i)} LeakyReLU(aᵀ[W x_i ‖ W x_j])`. `N(i)` excludes
/// `i` itself.
pub fn gat_attention_concentration(
    g: &Graph,
    nodes: &[usize],
    dim: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<AttentionStats>, BaselineError> {
    check(g, nodes, dim, trials)?;
    let mut sums: Vec<Vec<f64>> = nodes.iter().map(|&i| vec![0.0; g.degree(i)]).collect();
    let ws = (6.0 / (dim + GAT_OUT_DIM) as f64).sqrt();
    let as_ = (6.0 / (2 * GAT_OUT_DIM + 1) as f64).sqrt();
    let mut involved: Vec<usize> = nodes.iter().flat_map(|&i| std::iter::once(i).chain(g.neighbors(i).iter().copied())).collect();
    involved.sort_unstable();
    involved.dedup();
    let mut proj: Vec<Array1<f64>> = vec![Array1::zeros(GAT_OUT_DIM); g.num_nodes()];
    for trial in 0..trials {
        let mut prng = rng::stream(rng::derive_seed(seed, trial as u64), u64::MAX);
        let w = Array2::from_shape_simple_fn((GAT_OUT_DIM, dim), || prng.random_range(-ws..ws));
        let a = Array1::from_shape_simple_fn(2 * GAT_OUT_DIM, || prng.random_range(-as_..as_));
        let (a_self, a_nbr) = a.view().split_at(ndarray::Axis(0), GAT_OUT_DIM);
        for &v in &involved {
            proj[v] = w.dot(&gaussian_row(seed, trial, v, dim));
        }
        for (slot, &i) in sums.iter_mut().zip(nodes) {
            let base = a_self.dot(&proj[i]);
            let e: Vec<f64> = g
                .neighbors(i)
                .iter()
                .map(|&j| {
                    let s = base + a_nbr.dot(&proj[j]);
                    if s > 0.0 {
                        s
                    } else {
                        LEAKY_SLOPE * s
                    }
                })
                .collect();
            let m = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = e.iter().map(|v| (v - m).exp()).collect();
            let z: f64 = exps.iter().sum();
            for (acc, x) in slot.iter_mut().zip(&exps) {
                *acc += x / z;
            }
        }
    }
    Ok(nodes
        .iter()
        .zip(sums)
        .map(|(&i, s)| {
            let deg = g.degree(i);
            let mean_alpha: Vec<f64> = s.iter().map(|v| v / trials as f64).collect();
            let target = 1.0 / deg as f64;
            let max_deviation = mean_alpha.iter().map(|m| (m - target).abs()).fold(0.0, f64::max);
            AttentionStats {
                node: i,
                degree: deg,
                neighbors: g.neighbors(i).to_vec(),
                mean_alpha,
                max_deviation,
            }
        })
        .collect())
}

/// Empirical variance of the neighbourhood mean of i.i.d. `N(0, I_dim)`
/// features, pooled over coordinates and trials (the population mean 0 is
/// known, so the variance is the mean square).
pub fn sage_aggregation_covariance(
    g: &Graph,
    nodes: &[usize],
    dim: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<AggregationStats>, BaselineError> {
    check(g, nodes, dim, trials)?;
    let mut sq = vec![0.0; nodes.len()];
    for trial in 0..trials {
        for (acc, &i) in sq.iter_mut().zip(nodes) {
            let nbrs = g.neighbors(i);
            let mut agg = Array1::<f64>::zeros(dim);
            for &j in nbrs {
                agg += &gaussian_row(seed, trial, j, dim);
            }
            agg /= nbrs.len() as f64;
            *acc += agg.dot(&agg);
        }
    }
    Ok(nodes
        .iter()
        .zip(sq)
        .map(|(&i, s)| {
            let variance = s / (trials * dim) as f64;
            AggregationStats {
                node: i,
                degree: g.degree(i),
                variance,
                ratio: variance * g.degree(i) as f64,
            }
        })
        .collect())
}
