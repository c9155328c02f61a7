//! Link-prediction splits: a seeded partition of the edge set plus frozen
//! validation/test negatives.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::rng;

pub const DEFAULT_FRACS: (f64, f64, f64) = (0.85, 0.05, 0.10);

const SHUFFLE_STREAM: u64 = 0;
const NEGATIVE_STREAM: u64 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("split fractions must be positive and sum to 1, got {0:?}")]
    InvalidFractions((f64, f64, f64)),
    #[error("split would leave {which} empty ({edges} edges)")]
    InsufficientEdges { which: &'static str, edges: usize },
    #[error("graph has only {available} non-edges, {needed} negatives requested")]
    InsufficientNonEdges { available: usize, needed: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub fracs: [f64; 3],
    pub seed: u64,
    pub train_pos: Vec<(usize, usize)>,
    pub val_pos: Vec<(usize, usize)>,
    pub test_pos: Vec<(usize, usize)>,
    pub val_neg: Vec<(usize, usize)>,
    pub test_neg: Vec<(usize, usize)>,
    /// Whether the training positives alone connect every node. Trees never
    /// survive edge removal, so this is informational.
    #[serde(default)]
    pub train_connected: bool,
}

/// Validation and test sizes are `floor(frac · |E|)`; the remainder goes to
/// training.
pub fn split_sizes(num_edges: usize, fracs: (f64, f64, f64)) -> Result<(usize, usize, usize), SplitError> {
    let (a, b, c) = fracs;
    let ok = [a, b, c].iter().all(|f| f.is_finite() && *f >= 0.0) && ((a + b + c) - 1.0).abs() < 1e-9;
    if !ok {
        return Err(SplitError::InvalidFractions(fracs));
    }
    let m = num_edges as f64;
    let val = (b * m + 1e-9).floor() as usize;
    let test = (c * m + 1e-9).floor() as usize;
    let train = num_edges.saturating_sub(val + test);
    for (which, count) in [("train", train), ("val", val), ("test", test)] {
        if count == 0 {
            return Err(SplitError::InsufficientEdges { which, edges: num_edges });
        }
    }
    Ok((train, val, test))
}

pub fn make_splits(g: &Graph, fracs: (f64, f64, f64), seed: u64) -> Result<SplitSpec, SplitError> {
    let (n_train, n_val, _) = split_sizes(g.num_edges(), fracs)?;
    let mut edges = g.edges().to_vec();
    edges.shuffle(&mut rng::stream(seed, SHUFFLE_STREAM));
    let mut test_pos = edges.split_off(n_train + n_val);
    let mut val_pos = edges.split_off(n_train);
    let mut train_pos = edges;
    train_pos.sort_unstable();
    val_pos.sort_unstable();
    test_pos.sort_unstable();

    let n = g.num_nodes();
    let needed = val_pos.len() + test_pos.len();
    let available = n * (n - 1) / 2 - g.num_edges();
    if needed > available {
        return Err(SplitError::InsufficientNonEdges { available, needed });
    }
    let mut rng = rng::stream(seed, NEGATIVE_STREAM);
    let mut taken = HashSet::with_capacity(needed);
    let mut draw = |count: usize| {
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            if u == v {
                continue;
            }
            let e = (u.min(v), u.max(v));
            if g.has_edge(e.0, e.1) || !taken.insert(e) {
                continue;
            }
            out.push(e);
        }
        out
    };
    let val_neg = draw(val_pos.len());
    let test_neg = draw(test_pos.len());

    let train_connected = Graph::with_nodes(n, &train_pos).is_ok();
    Ok(SplitSpec {
        fracs: [fracs.0, fracs.1, fracs.2],
        seed,
        train_pos,
        val_pos,
        test_pos,
        val_neg,
        test_neg,
        train_connected,
    })
}
