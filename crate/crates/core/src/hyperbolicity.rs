//! Gromov δ-hyperbolicity from the four-point condition.
//!
//! On a hop metric every quadruple value is a multiple of ½, so values are
//! carried as [`HalfInt`] (a doubled integer) and compared exactly.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::graph::DistanceMatrix;
use crate::rng;

/// Default node cap for exhaustive O(n⁴) enumeration.
pub const DEFAULT_EXACT_CAP: usize = 512;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HyperbolicityError {
    #[error("node index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("exact δ needs {0} nodes in one block, above the configured cap")]
    SizeLimit(usize),
    #[error("empty graph")]
    Empty,
    #[error("at least one sample is required")]
    NoSamples,
}

/// Non-negative multiple of ½ stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HalfInt(u32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    pub fn from_doubled(twice: u32) -> Self {
        HalfInt(twice)
    }

    pub fn doubled(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 2.0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_f64())
    }
}

impl Serialize for HalfInt {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeltaMode {
    /// Exhaustive search. `by_blocks` is set when the search ran per
    /// biconnected component instead of over the whole vertex set.
    Exact { by_blocks: bool },
    Sampled { num_samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeltaResult {
    pub delta: HalfInt,
    pub witness: [usize; 4],
    pub mode: DeltaMode,
}

#[inline]
fn quad_doubled(d: &DistanceMatrix, x: usize, y: usize, u: usize, v: usize) -> u32 {
    let s1 = u32::from(d.get(x, y)) + u32::from(d.get(u, v));
    let s2 = u32::from(d.get(x, u)) + u32::from(d.get(y, v));
    let s3 = u32::from(d.get(x, v)) + u32::from(d.get(y, u));
    // largest minus middle of the three pairings
    let (hi, mid) = if s1 >= s2 {
        if s2 >= s3 {
            (s1, s2)
        } else if s1 >= s3 {
            (s1, s3)
        } else {
            (s3, s1)
        }
    } else if s1 >= s3 {
        (s2, s1)
    } else if s2 >= s3 {
        (s2, s3)
    } else {
        (s3, s2)
    };
    hi - mid
}

/// δ(x, y, u, v): half the gap between the two largest pairwise sums. Any
/// argument order is accepted; the sums are ordered internally.
pub fn delta_quadruple(d: &DistanceMatrix, x: usize, y: usize, u: usize, v: usize) -> Result<HalfInt, HyperbolicityError> {
    for i in [x, y, u, v] {
        if i >= d.num_nodes() {
            return Err(HyperbolicityError::IndexOutOfRange(i));
        }
    }
    Ok(HalfInt(quad_doubled(d, x, y, u, v)))
}

/// Exact δ(G) with the default cap.
pub fn delta_exact(d: &DistanceMatrix) -> Result<DeltaResult, HyperbolicityError> {
    delta_exact_with_cap(d, Some(DEFAULT_EXACT_CAP))
}

/// Exact δ(G). `cap = None` disables the size guard.
///
/// Graphs within the cap are searched exhaustively and the witness is the
/// lexicographically smallest maximising quadruple. Larger graphs are split
/// into biconnected components (δ(G) is the maximum over blocks, and blocks
/// are isometric subgraphs); the cap then applies to the largest block and the
/// witness is the smallest maximiser found inside a block.
pub fn delta_exact_with_cap(d: &DistanceMatrix, cap: Option<usize>) -> Result<DeltaResult, HyperbolicityError> {
    let n = d.num_nodes();
    if n == 0 {
        return Err(HyperbolicityError::Empty);
    }
    let limit = cap.unwrap_or(usize::MAX);
    if n <= limit {
        let (best, witness) = exhaustive(d);
        return Ok(DeltaResult {
            delta: HalfInt(best),
            witness,
            mode: DeltaMode::Exact { by_blocks: false },
        });
    }

    let blocks = biconnected_blocks(d);
    let largest = blocks.iter().map(Vec::len).max().unwrap_or(0);
    if largest > limit {
        return Err(HyperbolicityError::SizeLimit(largest));
    }
    let mut best = 0u32;
    let mut witness = [0usize; 4];
    for block in blocks.iter().filter(|b| b.len() >= 4) {
        let sub = d.submatrix(block);
        let (b_best, w) = exhaustive(&sub);
        if b_best == 0 {
            continue;
        }
        let mut global = w.map(|i| block[i]);
        global.sort_unstable();
        if b_best > best || (b_best == best && global < witness) {
            best = b_best;
            witness = global;
        }
    }
    Ok(DeltaResult {
        delta: HalfInt(best),
        witness,
        mode: DeltaMode::Exact { by_blocks: true },
    })
}

/// Max over x<y<u<v. δ is invariant under permuting the quadruple and any
/// repeated node gives 0, so this equals the sup over all ordered 4-tuples;
/// the first maximiser in this order is the lexicographic minimum over
/// ordered tuples too.
fn exhaustive(d: &DistanceMatrix) -> (u32, [usize; 4]) {
    let n = d.num_nodes();
    let per_x: Vec<(u32, [usize; 4])> = (0..n.saturating_sub(3))
        .into_par_iter()
        .map(|x| {
            let mut best = 0u32;
            let mut wit = [0usize; 4];
            for y in x + 1..n {
                let dxy = u32::from(d.get(x, y));
                for u in y + 1..n {
                    let dxu = u32::from(d.get(x, u));
                    let dyu = u32::from(d.get(y, u));
                    let row_u = d.row(u);
                    for v in u + 1..n {
                        let s1 = dxy + u32::from(row_u[v]);
                        let s2 = dxu + u32::from(d.get(y, v));
                        let s3 = u32::from(d.get(x, v)) + dyu;
                        let hi = s1.max(s2).max(s3);
                        let lo = s1.min(s2).min(s3);
                        let mid = s1 + s2 + s3 - hi - lo;
                        if hi - mid > best {
                            best = hi - mid;
                            wit = [x, y, u, v];
                        }
                    }
                }
            }
            (best, wit)
        })
        .collect();
    // per_x is ordered by x, so the first strict improvement is the lex-min
    per_x
        .into_iter()
        .fold((0, [0; 4]), |acc, cur| if cur.0 > acc.0 { cur } else { acc })
}

/// Max over `num_samples` uniformly drawn quadruples. Sample `i` uses its own
/// stream keyed by `i`, so the answer does not depend on thread count.
/// Ties keep the lowest sample index.
pub fn delta_sampled(d: &DistanceMatrix, num_samples: u64, seed: u64) -> Result<DeltaResult, HyperbolicityError> {
    let n = d.num_nodes();
    if n == 0 {
        return Err(HyperbolicityError::Empty);
    }
    if num_samples == 0 {
        return Err(HyperbolicityError::NoSamples);
    }
    const CHUNK: u64 = 4096;
    let chunks = num_samples.div_ceil(CHUNK);
    let best = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(seed, c);
            let mut best = (0u32, u64::MAX, [0usize; 4]);
            for i in c * CHUNK..((c + 1) * CHUNK).min(num_samples) {
                let q = [
                    rng.random_range(0..n),
                    rng.random_range(0..n),
                    rng.random_range(0..n),
                    rng.random_range(0..n),
                ];
                let val = quad_doubled(d, q[0], q[1], q[2], q[3]);
                if best.1 == u64::MAX || val > best.0 {
                    best = (val, i, q);
                }
            }
            best
        })
        .reduce(
            || (0, u64::MAX, [0; 4]),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    Ok(DeltaResult {
        delta: HalfInt(best.0),
        witness: best.2,
        mode: DeltaMode::Sampled { num_samples, seed },
    })
}

/// Vertex sets of the biconnected components, using distance-1 pairs as edges.
fn biconnected_blocks(d: &DistanceMatrix) -> Vec<Vec<usize>> {
    let n = d.num_nodes();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|u| (0..n).filter(|&v| d.get(u, v) == 1).collect())
        .collect();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut time = 0usize;
    let mut edge_stack: Vec<(usize, usize)> = Vec::new();
    let mut blocks = Vec::new();

    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = time;
        low[root] = time;
        time += 1;
        // (node, parent, next neighbour index)
        let mut stack = vec![(root, usize::MAX, 0usize)];
        while let Some(&mut (u, parent, ref mut idx)) = stack.last_mut() {
            if *idx < adj[u].len() {
                let v = adj[u][*idx];
                *idx += 1;
                if disc[v] == usize::MAX {
                    edge_stack.push((u, v));
                    disc[v] = time;
                    low[v] = time;
                    time += 1;
                    stack.push((v, u, 0));
                } else if v != parent && disc[v] < disc[u] {
                    edge_stack.push((u, v));
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if parent != usize::MAX {
                    low[parent] = low[parent].min(low[u]);
                    if low[u] >= disc[parent] {
                        let mut nodes = Vec::new();
                        while let Some((a, b)) = edge_stack.pop() {
                            nodes.push(a);
                            nodes.push(b);
                            if (a, b) == (parent, u) {
                                break;
                            }
                        }
                        nodes.sort_unstable();
                        nodes.dedup();
                        blocks.push(nodes);
                    }
                }
            }
        }
    }
    blocks
}
