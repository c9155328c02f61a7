//! Slow, independent reference implementations used by the integration tests.
#![allow(dead_code)]

use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;
use treebench_core::baselines::{loss_and_grad, Encoder, FermiDiracParams, Model, ModelConfig, NormalizedAdjacency};
use treebench_core::hyperboloid::{minkowski_inner, origin, Curvature, HPoint, TangentVec};
use treebench_core::Graph;

pub const INF: u32 = u32::MAX / 4;

pub fn floyd_warshall(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<u32>> {
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(u, v) in edges {
        d[u][v] = 1;
        d[v][u] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Doubled δ(G) by the literal definition: every ordered quadruple, sums
/// sorted descending, `S1 − S2`.
pub fn naive_delta_doubled(d: &[Vec<u32>]) -> u32 {
    let n = d.len();
    let mut best = 0;
    for x in 0..n {
        for y in 0..n {
            for u in 0..n {
                for v in 0..n {
                    let mut s = [d[x][y] + d[u][v], d[x][u] + d[y][v], d[x][v] + d[y][u]];
                    s.sort_unstable_by(|a, b| b.cmp(a));
                    best = best.max(s[0] - s[1]);
                }
            }
        }
    }
    best
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Exact transport cost between uniform measures of sizes `m` and `n` by
/// successive shortest paths on integer masses (`L/m` and `L/n` units,
/// `L = lcm(m, n)`). Returns the cost divided by `L`.
pub fn uniform_transport_oracle(m: usize, n: usize, cost: &[u32]) -> f64 {
    let l = (m as u64 * n as u64 / gcd(m as u64, n as u64)) as i64;
    let (sup, dem) = (l / m as i64, l / n as i64);
    // nodes: 0 source, 1..=m supply, m+1..=m+n demand, m+n+1 sink
    let nodes = m + n + 2;
    let sink = nodes - 1;
    struct Arc {
        to: usize,
        cap: i64,
        cost: i64,
    }
    let mut arcs: Vec<Arc> = Vec::new();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let add = |arcs: &mut Vec<Arc>, out: &mut Vec<Vec<usize>>, a: usize, b: usize, cap: i64, c: i64| {
        out[a].push(arcs.len());
        arcs.push(Arc { to: b, cap, cost: c });
        out[b].push(arcs.len());
        arcs.push(Arc { to: a, cap: 0, cost: -c });
    };
    for i in 0..m {
        add(&mut arcs, &mut out, 0, 1 + i, sup, 0);
        for j in 0..n {
            add(&mut arcs, &mut out, 1 + i, 1 + m + j, l, i64::from(cost[i * n + j]));
        }
    }
    for j in 0..n {
        add(&mut arcs, &mut out, 1 + m + j, sink, dem, 0);
    }
    let mut flow = 0;
    let mut total = 0i64;
    while flow < l {
        let mut dist = vec![i64::MAX; nodes];
        let mut via = vec![usize::MAX; nodes];
        dist[0] = 0;
        for _ in 0..nodes {
            let mut changed = false;
            for a in 0..nodes {
                if dist[a] == i64::MAX {
                    continue;
                }
                for &e in &out[a] {
                    let arc = &arcs[e];
                    if arc.cap > 0 && dist[a] + arc.cost < dist[arc.to] {
                        dist[arc.to] = dist[a] + arc.cost;
                        via[arc.to] = e;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        assert!(dist[sink] < i64::MAX, "oracle: no augmenting path");
        let mut push = l - flow;
        let mut v = sink;
        while v != 0 {
            let e = via[v];
            push = push.min(arcs[e].cap);
            v = arcs[e ^ 1].to;
        }
        let mut v = sink;
        while v != 0 {
            let e = via[v];
            arcs[e].cap -= push;
            arcs[e ^ 1].cap += push;
            v = arcs[e ^ 1].to;
        }
        flow += push;
        total += push * dist[sink];
    }
    total as f64 / l as f64
}

/// Minimum transport cost by enumerating every basic solution (subsets of
/// `m + n − 1` cells) of the transportation polytope. Only for tiny problems.
pub fn basic_feasible_oracle(supply: &[f64], demand: &[f64], cost: &[f64]) -> f64 {
    let (m, n) = (supply.len(), demand.len());
    let k = m + n - 1;
    let cells = m * n;
    let mut best = f64::INFINITY;
    let mut pick: Vec<usize> = (0..k).collect();
    loop {
        if let Some(x) = solve_basis(supply, demand, &pick) {
            if x.iter().all(|&v| v >= -1e-12) {
                let c: f64 = pick.iter().zip(&x).map(|(&cell, &v)| cost[cell] * v).sum();
                best = best.min(c);
            }
        }
        // next combination
        let mut i = k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < cells - k + i {
                pick[i] += 1;
                for j in i + 1..k {
                    pick[j] = pick[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Solves the row/column-sum equations on the chosen cells by Gaussian
/// elimination; `None` if they are not a basis.
fn solve_basis(supply: &[f64], demand: &[f64], pick: &[usize]) -> Option<Vec<f64>> {
    let (m, n) = (supply.len(), demand.len());
    let k = pick.len();
    let rows = m + n;
    let mut a = vec![vec![0.0; k + 1]; rows];
    for (c, &cell) in pick.iter().enumerate() {
        a[cell / n][c] = 1.0;
        a[m + cell % n][c] = 1.0;
    }
    for i in 0..m {
        a[i][k] = supply[i];
    }
    for j in 0..n {
        a[m + j][k] = demand[j];
    }
    let mut r = 0;
    for c in 0..k {
        let p = (r..rows).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-12 {
            return None;
        }
        a.swap(r, p);
        let piv = a[r][c];
        for x in a[r].iter_mut() {
            *x /= piv;
        }
        for i in 0..rows {
            if i != r && a[i][c] != 0.0 {
                let f = a[i][c];
                for j in 0..=k {
                    a[i][j] -= f * a[r][j];
                }
            }
        }
        r += 1;
    }
    // the remaining equation must be consistent
    if a[r..].iter().any(|row| row[k].abs() > 1e-9) {
        return None;
    }
    Some((0..k).map(|c| a[c][k]).collect())
}

/// Random connected graph: a random recursive tree plus extra edges, then a
/// random relabelling.
pub fn connected_graph(max_nodes: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2..=max_nodes)
        .prop_flat_map(|n| {
            let parents: Vec<_> = (1..n).map(|i| 0..i).collect();
            let extra = proptest::collection::vec((0..n, 0..n), 0..=n);
            (Just(n), parents, extra, Just((0..n).collect::<Vec<usize>>()).prop_shuffle())
        })
        .prop_map(|(n, parents, extra, perm)| {
            let mut edges: Vec<(usize, usize)> = parents.iter().enumerate().map(|(i, &p)| (p, i + 1)).collect();
            edges.extend(extra.into_iter().filter(|(a, b)| a != b));
            let edges = edges.into_iter().map(|(a, b)| (perm[a], perm[b])).collect();
            (n, edges)
        })
}

/// Random tree on `2..=max_nodes` nodes (random recursive tree, relabelled).
pub fn tree(max_nodes: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2..=max_nodes)
        .prop_flat_map(|n| {
            let parents: Vec<_> = (1..n).map(|i| 0..i).collect();
            (Just(n), parents, Just((0..n).collect::<Vec<usize>>()).prop_shuffle())
        })
        .prop_map(|(n, parents, perm)| {
            let edges = parents.iter().enumerate().map(|(i, &p)| (perm[p], perm[i + 1])).collect();
            (n, edges)
        })
}

pub fn build(n: usize, edges: &[(usize, usize)]) -> Graph {
    Graph::with_nodes(n, edges).expect("generated graph is connected")
}

pub fn cycle(n: usize) -> Graph {
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Graph::from_edge_list(&edges).unwrap()
}

/// Every labelled connected graph on `n` nodes, as edge lists.
pub fn all_connected_graphs(n: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << pairs.len()) {
        let edges: Vec<_> = pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e).collect();
        if Graph::with_nodes(n, &edges).is_ok() {
            out.push(edges);
        }
    }
    out
}

/// Random connected graph on `n` nodes from a plain RNG: random recursive
/// tree, up to `n` extra edges, random labels.
pub fn random_connected<R: Rng>(rng: &mut R, n: usize) -> Graph {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (perm[rng.random_range(0..i)], perm[i])).collect();
    for _ in 0..rng.random_range(0..=n) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            edges.push((a, b));
        }
    }
    build(n, &edges)
}

/// Tangent vector at `x` of Lorentz length `len`: the spatial direction
/// `dir` at the origin, parallel-transported along the geodesic to `x`.
pub fn transported_tangent(x: &HPoint, k: Curvature, dir: &[f64], len: f64) -> TangentVec {
    let n = x.dim();
    let o = origin(n, k);
    let en = dir[..n].iter().map(|a| a * a).sum::<f64>().sqrt();
    let scale = if en > 0.0 { len / en } else { 0.0 };
    let mut u: Vec<f64> = std::iter::once(0.0).chain(dir[..n].iter().map(|a| a * scale)).collect();
    let kk = -k.value();
    let c = kk * minkowski_inner(x.coords(), &u).unwrap() / (1.0 - kk * minkowski_inner(o.coords(), x.coords()).unwrap());
    for ((t, a), b) in u.iter_mut().zip(o.coords()).zip(x.coords()) {
        *t += c * (a + b);
    }
    TangentVec::new(x.clone(), u).unwrap()
}

/// Largest tangent length used in the round-trip checks: 10, and at most
/// 10 in curvature units so `cosh` stays inside f64 range.
pub fn tangent_reach(k: Curvature) -> f64 {
    10f64.min(10.0 / k.sqrt_abs())
}

pub const FIXTURE_EDGES: [(usize, usize); 12] =
    [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6), (3, 7), (4, 8), (5, 9), (6, 9), (7, 8), (0, 9)];
pub const FIXTURE_NEG: [(usize, usize); 6] = [(0, 3), (1, 9), (2, 7), (4, 6), (5, 8), (3, 6)];

pub fn fixture_features(seed: u64) -> Array2<f64> {
    let mut r = treebench_core::rng::stream(seed, 0);
    Array2::from_shape_simple_fn((10, 5), || r.random_range(-1.0..1.0))
}

pub fn fixture_model(encoder: Encoder, embed: Option<usize>, seed: u64) -> Model {
    let cfg = ModelConfig {
        encoder,
        hidden_dims: vec![8, 6],
        embed_dim: embed,
        seed,
        ..ModelConfig::default()
    };
    let fd = FermiDiracParams { r: 1.5, t: 0.7, clamp_max: 20.0 };
    Model::for_config(&cfg, 5, &fd)
}

/// Worst `|analytic − numeric| / (|analytic| + |numeric|)` over all
/// parameters, with central differences of step 1e-4 and a 1e-4 floor on
/// the denominator.
pub fn gradient_mismatch(m: &Model, x: &Array2<f64>, adj: Option<&NormalizedAdjacency>) -> f64 {
    let (pos, neg) = (&FIXTURE_EDGES[..], &FIXTURE_NEG[..]);
    let (_, g) = loss_and_grad(m, x, adj, pos, neg).unwrap();
    let base = m.flat_params();
    let h = 1e-4;
    let mut probe = m.clone();
    let mut worst: f64 = 0.0;
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] = base[i] + h;
        probe.set_flat_params(&p);
        let up = loss_and_grad(&probe, x, adj, pos, neg).unwrap().0;
        p[i] = base[i] - h;
        probe.set_flat_params(&p);
        let down = loss_and_grad(&probe, x, adj, pos, neg).unwrap().0;
        let num = (up - down) / (2.0 * h);
        worst = worst.max((g[i] - num).abs() / (g[i].abs() + num.abs()).max(1e-4));
    }
    worst
}
