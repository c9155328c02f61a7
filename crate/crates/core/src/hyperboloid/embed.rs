//! Greedy embedding of trees in H² and the average-distortion measure.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rayon::prelude::*;

use super::{distance, exp_map, lorentz, log_map, origin, Curvature, HPoint, HyperbolicError, TangentVec};
use crate::graph::{apsp, DistanceMatrix, Graph};

#[derive(Debug, Clone)]
pub struct TreeEmbedding {
    pub curvature: Curvature,
    pub tau: f64,
    /// Indexed by node id.
    pub points: Vec<HPoint>,
}

/// Places node 0 at the origin and every child at geodesic distance `tau`
/// from its parent.
///
/// The root's children are spread evenly over the full circle starting at
/// angle 0. A non-root node with `c` children puts them at the centres of `c`
/// equal sub-arcs of the cone of half-angle `π / (c + 1)` around the direction
/// pointing away from its own parent. Children are visited in ascending id
/// order.
pub fn tree_embed(g: &Graph, k: Curvature, tau: f64) -> Result<TreeEmbedding, HyperbolicError> {
    if !g.is_tree() {
        return Err(HyperbolicError::NotATree);
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(HyperbolicError::InvalidScale);
    }
    let n = g.num_nodes();
    let mut points: Vec<Option<HPoint>> = vec![None; n];
    let mut parent = vec![usize::MAX; n];
    let o = origin(2, k);
    points[0] = Some(o.clone());

    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        let children: Vec<usize> = g.neighbors(u).iter().copied().filter(|&v| v != parent[u]).collect();
        if children.is_empty() {
            continue;
        }
        let here = points[u].clone().expect("parent placed before children");
        let c = children.len() as f64;
        let (forward, side, angles): (Vec<f64>, Vec<f64>, Vec<f64>) = if u == 0 {
            let angles = (0..children.len()).map(|i| 2.0 * PI * i as f64 / c).collect();
            (vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], angles)
        } else {
            let back = log_map(&here, points[parent[u]].as_ref().expect("placed"), k)?;
            let bn = back.norm();
            let forward: Vec<f64> = back.components().iter().map(|x| -x / bn).collect();
            let side = lorentz_cross(here.coords(), &forward);
            let half = PI / (c + 1.0);
            let angles = (0..children.len())
                .map(|i| -half + (2.0 * i as f64 + 1.0) * half / c)
                .collect();
            (forward, side, angles)
        };
        for (&child, phi) in children.iter().zip(angles) {
            let (cs, sn) = (phi.cos(), phi.sin());
            let v: Vec<f64> = forward.iter().zip(&side).map(|(f, s)| tau * (cs * f + sn * s)).collect();
            let tv = TangentVec::new(here.clone(), v)?;
            points[child] = Some(exp_map(&tv, k));
            parent[child] = u;
            queue.push_back(child);
        }
    }
    let points = points.into_iter().map(|p| p.expect("tree is connected")).collect();
    Ok(TreeEmbedding { curvature: k, tau, points })
}

/// Unit tangent at `p` orthogonal to the unit tangent `u`, via the Lorentzian
/// cross product (`⟨p ×_L u, a⟩_L = det[p, u, a]`).
fn lorentz_cross(p: &[f64], u: &[f64]) -> Vec<f64> {
    let c = [
        -(p[1] * u[2] - p[2] * u[1]),
        p[2] * u[0] - p[0] * u[2],
        p[0] * u[1] - p[1] * u[0],
    ];
    let norm = lorentz(&c, &c).max(0.0).sqrt();
    c.iter().map(|x| x / norm).collect()
}

/// Mean over unordered node pairs of `|d_H(f(u), f(v)) / (tau·d_G(u, v)) − 1|`.
pub fn average_distortion(g: &Graph, emb: &[HPoint], k: Curvature, tau: f64) -> Result<f64, HyperbolicError> {
    let d = apsp(g).map_err(|_| HyperbolicError::MissingNode {
        expected: g.num_nodes(),
        got: emb.len(),
    })?;
    average_distortion_with(&d, emb, k, tau)
}

pub fn average_distortion_with(d: &DistanceMatrix, emb: &[HPoint], k: Curvature, tau: f64) -> Result<f64, HyperbolicError> {
    let n = d.num_nodes();
    if emb.len() < n {
        return Err(HyperbolicError::MissingNode { expected: n, got: emb.len() });
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(HyperbolicError::InvalidScale);
    }
    if n < 2 {
        return Ok(0.0);
    }
    let total = (0..n)
        .into_par_iter()
        .map(|u| {
            let mut acc = 0.0;
            for v in u + 1..n {
                let dh = distance(&emb[u], &emb[v], k)?;
                acc += (dh / (tau * f64::from(d.get(u, v))) - 1.0).abs();
            }
            Ok(acc)
        })
        .collect::<Result<Vec<f64>, HyperbolicError>>()?
        .into_iter()
        .sum::<f64>();
    Ok(total / (n * (n - 1) / 2) as f64)
}
