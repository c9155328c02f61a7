//! The `Tree(b, ℓ, γ, δ, 𝒩(0, I_dim))` dataset family.
//!
//! The graph is the complete `b`-ary tree with `ℓ` levels below the root,
//! numbered breadth-first (root 0, children of `i` are `b·i + 1 ..= b·i + b`).
//! Features are generated top-down: the root row is a standard Gaussian draw
//! and every other row is `γ·parent + δ·v` with a fresh draw `v`.

mod io;
mod split;

pub use io::{
    decode_features, encode_features, read_dataset, read_splits, write_atomic, write_dataset, write_splits, DatasetMeta,
    FormatError, EDGES_FILE, FEATURES_FILE, FEATURES_MAGIC, FEATURES_VERSION, META_FILE, SPLITS_FILE,
};
pub use split::{make_splits, split_sizes, SplitError, SplitSpec, DEFAULT_FRACS};

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError};
use crate::rng;

/// Upper bound on generated node counts.
pub const DEFAULT_NODE_CAP: usize = 1 << 22;
pub const GENERATOR_VERSION: &str = concat!("treebench ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error, PartialEq)]
pub enum TreeGenError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("tree would have {0} nodes, above the cap")]
    SizeLimit(u128),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Branch factor.
    pub b: usize,
    /// Levels below the root.
    #[serde(rename = "l")]
    pub levels: usize,
    /// Parental dependence.
    pub gamma: f64,
    /// Noise scale of the fresh draw (not δ-hyperbolicity).
    pub delta: f64,
    pub dim: usize,
    pub seed: u64,
}

impl TreeParams {
    /// `Tree(10, 3, γ, 1)` at the given feature dimension.
    pub fn tree1111(gamma: f64, dim: usize, seed: u64) -> Self {
        Self {
            b: 10,
            levels: 3,
            gamma,
            delta: 1.0,
            dim,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), TreeGenError> {
        if self.b == 0 {
            return Err(TreeGenError::InvalidParams("branch factor must be at least 1".into()));
        }
        if self.levels == 0 {
            return Err(TreeGenError::InvalidParams("levels must be at least 1".into()));
        }
        if self.dim == 0 {
            return Err(TreeGenError::InvalidParams("feature dimension must be at least 1".into()));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) || !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(TreeGenError::InvalidParams("gamma and delta must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// `(b^(ℓ+1) − 1)/(b − 1)`, or `ℓ + 1` for `b = 1`. Computed in u128 so
    /// oversized requests are reported rather than wrapped.
    pub fn node_count(&self) -> u128 {
        if self.b == 1 {
            return self.levels as u128 + 1;
        }
        let mut total: u128 = 0;
        let mut level: u128 = 1;
        for _ in 0..=self.levels {
            total = total.saturating_add(level);
            level = level.saturating_mul(self.b as u128);
        }
        total
    }

    /// Dataset name: `Tree<nodes>`, suffixed with `_γ` when γ ≠ 0.
    pub fn dataset_name(&self) -> String {
        let base = format!("Tree{}", self.node_count());
        if self.gamma == 0.0 {
            base
        } else {
            format!("{base}_{}", self.gamma)
        }
    }
}

/// Graph, features and provenance of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: Graph,
    /// Row-major `num_nodes × dim`.
    pub features: Array2<f32>,
    /// Absent for datasets ingested from elsewhere.
    pub params: Option<TreeParams>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn name(&self) -> &str {
        &self.meta.name
    }
}

pub fn generate_graph(params: &TreeParams) -> Result<Graph, TreeGenError> {
    generate_graph_capped(params, DEFAULT_NODE_CAP)
}

pub fn generate_graph_capped(params: &TreeParams, cap: usize) -> Result<Graph, TreeGenError> {
    params.validate()?;
    let count = params.node_count();
    if count > cap as u128 {
        return Err(TreeGenError::SizeLimit(count));
    }
    let n = count as usize;
    let edges: Vec<(usize, usize)> = (1..n).map(|i| (parent_of(i, params.b), i)).collect();
    Ok(Graph::with_nodes(n, &edges)?)
}

#[inline]
pub fn parent_of(node: usize, b: usize) -> usize {
    (node - 1) / b
}

/// Row `i` comes from the stream keyed by `i`, so values do not depend on the
/// order rows are produced in. Parents precede children in BFS numbering.
pub fn generate_features(params: &TreeParams, g: &Graph) -> Array2<f32> {
    let (n, dim) = (g.num_nodes(), params.dim);
    let mut x = Array2::<f32>::zeros((n, dim));
    let mut draw = vec![0f64; dim];
    for i in 0..n {
        let mut rng = rng::stream(params.seed, i as u64);
        for d in draw.iter_mut() {
            *d = StandardNormal.sample(&mut rng);
        }
        if i == 0 {
            for (out, &d) in x.row_mut(0).iter_mut().zip(&draw) {
                *out = d as f32;
            }
        } else {
            let p = parent_of(i, params.b);
            let (before, mut rest) = x.view_mut().split_at(ndarray::Axis(0), i);
            let parent_row = before.row(p);
            for ((out, &pv), &d) in rest.row_mut(0).iter_mut().zip(parent_row.iter()).zip(&draw) {
                *out = (params.gamma * f64::from(pv) + params.delta * d) as f32;
            }
        }
    }
    x
}

pub fn generate_dataset(params: &TreeParams) -> Result<Dataset, TreeGenError> {
    let graph = generate_graph(params)?;
    let features = generate_features(params, &graph);
    Ok(Dataset {
        graph,
        features,
        params: Some(*params),
        meta: DatasetMeta {
            name: params.dataset_name(),
            generator_version: Some(GENERATOR_VERSION.to_string()),
        },
    })
}
