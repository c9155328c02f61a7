//! Ollivier-Ricci curvature of graph edges.
//!
//! For an edge (x, y), `m_x` and `m_y` are uniform over the neighbour sets
//! (x itself carries no mass) and
//! `κ(x, y) = 1 − T₁(m_x, m_y) / d(x, y)`, with `T₁` the exact L¹
//! transportation cost under the hop metric.

pub mod transport;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{DistanceMatrix, Graph};

#[derive(Debug, Error, PartialEq)]
pub enum RicciError {
    #[error("({0}, {1}) is not an edge")]
    NotAnEdge(usize, usize),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("transport solver failed: {0}")]
    SolverFailure(String),
    #[error("histogram bin width must be positive, got {0}")]
    InvalidBinWidth(f64),
}

/// Probability measure with finite support on graph nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMeasure {
    support: Vec<usize>,
    mass: Vec<f64>,
}

impl NodeMeasure {
    pub fn new(support: Vec<usize>, mass: Vec<f64>) -> Result<Self, RicciError> {
        if support.is_empty() || support.len() != mass.len() {
            return Err(RicciError::InvalidMeasure("support and mass must be non-empty and aligned".into()));
        }
        if mass.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(RicciError::InvalidMeasure("masses must be positive".into()));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(RicciError::InvalidMeasure(format!("masses sum to {total}")));
        }
        let mut sorted = support.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(RicciError::InvalidMeasure("repeated support node".into()));
        }
        Ok(Self { support, mass })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }
}

/// Uniform measure on the neighbours of `x`.
pub fn neighbor_measure(g: &Graph, x: usize) -> NodeMeasure {
    let nbrs = g.neighbors(x).to_vec();
    let w = 1.0 / nbrs.len() as f64;
    let mass = vec![w; nbrs.len()];
    NodeMeasure { support: nbrs, mass }
}

/// Ground distances between nodes.
pub trait HopDistance {
    fn hops(&self, u: usize, v: usize) -> f64;
}

impl HopDistance for DistanceMatrix {
    fn hops(&self, u: usize, v: usize) -> f64 {
        f64::from(self.get(u, v))
    }
}

/// Distances needed for one edge, computed by BFS truncated at depth 3 from
/// each neighbour of `x`. Every pair in `N(x) × N(y)` of an edge is within 3
/// hops, so this avoids the dense matrix on large graphs.
#[derive(Debug, Clone)]
pub struct LocalDistances {
    sources: Vec<usize>,
    rows: Vec<Vec<(usize, u8)>>,
}

impl LocalDistances {
    pub fn around(g: &Graph, x: usize) -> Self {
        let sources = g.neighbors(x).to_vec();
        let rows = sources
            .iter()
            .map(|&s| {
                let mut found = vec![(s, 0u8)];
                let mut frontier = vec![s];
                for depth in 1..=3u8 {
                    let mut next = Vec::new();
                    for &u in &frontier {
                        for &v in g.neighbors(u) {
                            if !found.iter().any(|&(w, _)| w == v) {
                                found.push((v, depth));
                                next.push(v);
                            }
                        }
                    }
                    frontier = next;
                }
                found
            })
            .collect();
        Self { sources, rows }
    }
}

impl HopDistance for LocalDistances {
    fn hops(&self, u: usize, v: usize) -> f64 {
        let (row, target) = match self.sources.iter().position(|&s| s == u) {
            Some(r) => (r, v),
            None => match self.sources.iter().position(|&s| s == v) {
                Some(r) => (r, u),
                None => return f64::INFINITY,
            },
        };
        self.rows[row]
            .iter()
            .find(|&&(w, _)| w == target)
            .map_or(f64::INFINITY, |&(_, d)| f64::from(d))
    }
}

/// Exact W₁ distance between two measures under `d`.
pub fn transport_distance<D: HopDistance + ?Sized>(d: &D, a: &NodeMeasure, b: &NodeMeasure) -> Result<f64, RicciError> {
    let mut cost = Vec::with_capacity(a.support.len() * b.support.len());
    for &u in &a.support {
        for &v in &b.support {
            let c = d.hops(u, v);
            if !c.is_finite() {
                return Err(RicciError::SolverFailure(format!("no distance between {u} and {v}")));
            }
            cost.push(c);
        }
    }
    Ok(transport::solve(&a.mass, &b.mass, &cost)?.cost)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeCurvature {
    pub edge: (usize, usize),
    pub kappa: f64,
    pub transport_cost: f64,
}

pub fn edge_curvature<D: HopDistance + ?Sized>(g: &Graph, d: &D, x: usize, y: usize) -> Result<EdgeCurvature, RicciError> {
    if !g.has_edge(x, y) {
        return Err(RicciError::NotAnEdge(x, y));
    }
    let cost = transport_distance(d, &neighbor_measure(g, x), &neighbor_measure(g, y))?;
    let dxy = d.hops(x, y);
    Ok(EdgeCurvature {
        edge: (x, y),
        kappa: 1.0 - cost / dxy,
        transport_cost: cost,
    })
}

/// Fixed-width histogram of curvature values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub bins: Vec<HistogramBin>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub count: usize,
}

pub const DEFAULT_BIN_WIDTH: f64 = 0.1;
const HIST_LOW: f64 = -2.0;
const HIST_HIGH: f64 = 1.0;

impl Histogram {
    /// Bins cover `[-2, 1]`, extended downward in whole bins if any value is
    /// below −2. A small slack keeps values that are exact bin edges up to
    /// rounding (κ = 0 on leaf edges) in the bin they belong to.
    pub fn build(values: &[f64], bin_width: f64) -> Result<Self, RicciError> {
        if !(bin_width > 0.0) || !bin_width.is_finite() {
            return Err(RicciError::InvalidBinWidth(bin_width));
        }
        let min = values.iter().copied().fold(HIST_LOW, f64::min);
        let low_bins = ((HIST_LOW - min) / bin_width - 1e-9).ceil().max(0.0);
        let low = HIST_LOW - low_bins * bin_width;
        let nbins = (((HIST_HIGH - low) / bin_width) - 1e-9).ceil() as usize + 1;
        let mut counts = vec![0usize; nbins];
        for &v in values {
            let idx = ((v - low) / bin_width + 1e-9).floor().max(0.0) as usize;
            counts[idx.min(nbins - 1)] += 1;
        }
        let bins = counts
            .into_iter()
            .enumerate()
            .map(|(i, count)| HistogramBin {
                bin_left: round_edge(low + i as f64 * bin_width),
                count,
            })
            .collect();
        Ok(Self { bin_width, bins })
    }

    /// Bin with the highest count (first on ties).
    pub fn modal_bin(&self) -> Option<HistogramBin> {
        self.bins
            .iter()
            .copied()
            .filter(|b| b.count > 0)
            .fold(None, |best: Option<HistogramBin>, b| match best {
                Some(cur) if cur.count >= b.count => Some(cur),
                _ => Some(b),
            })
    }

    pub fn bin_index(&self, value: f64) -> usize {
        let low = self.bins[0].bin_left;
        (((value - low) / self.bin_width + 1e-9).floor().max(0.0) as usize).min(self.bins.len() - 1)
    }
}

fn round_edge(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureProfile {
    pub edges: Vec<EdgeCurvature>,
    pub histogram: Histogram,
}

impl CurvatureProfile {
    pub fn kappas(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.kappa).collect()
    }
}

/// Curvature of every edge (in canonical edge order) using the dense
/// distance matrix.
pub fn curvature_profile(g: &Graph, d: &DistanceMatrix, bin_width: f64) -> Result<CurvatureProfile, RicciError> {
    let edges = g
        .edges()
        .par_iter()
        .map(|&(x, y)| edge_curvature(g, d, x, y))
        .collect::<Result<Vec<_>, _>>()?;
    finish_profile(edges, bin_width)
}

/// Same as [`curvature_profile`] without materialising all-pairs distances.
pub fn curvature_profile_local(g: &Graph, bin_width: f64) -> Result<CurvatureProfile, RicciError> {
    let edges = g
        .edges()
        .par_iter()
        .map(|&(x, y)| edge_curvature(g, &LocalDistances::around(g, x), x, y))
        .collect::<Result<Vec<_>, _>>()?;
    finish_profile(edges, bin_width)
}

fn finish_profile(edges: Vec<EdgeCurvature>, bin_width: f64) -> Result<CurvatureProfile, RicciError> {
    let values: Vec<f64> = edges.iter().map(|e| e.kappa).collect();
    let histogram = Histogram::build(&values, bin_width)?;
    Ok(CurvatureProfile { edges, histogram })
}
