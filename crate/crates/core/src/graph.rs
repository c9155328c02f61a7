//! Undirected connected graphs in compressed adjacency form, and exact
//! all-pairs hop distances.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge list is empty")]
    EmptyInput,
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("graph is disconnected ({0} components)")]
    Disconnected(usize),
    #[error("node {node} out of range for a graph with {num_nodes} nodes")]
    IndexOutOfRange { node: usize, num_nodes: usize },
    #[error("hop distance exceeds the 16-bit range")]
    DistanceOverflow,
    #[error("edge list parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}

/// Immutable, validated, connected undirected graph.
///
/// Edges are stored canonically as `(min, max)` pairs sorted lexicographically;
/// neighbour lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl Graph {
    /// Builds a graph from unordered node pairs. Repeated pairs, in either
    /// orientation, collapse to a single edge. The node count is one past the
    /// largest index seen.
    pub fn from_edge_list(pairs: &[(usize, usize)]) -> Result<Self, GraphError> {
        if pairs.is_empty() {
            return Err(GraphError::EmptyInput);
        }
        let num_nodes = pairs.iter().map(|&(u, v)| u.max(v)).max().unwrap_or(0) + 1;
        Self::with_nodes(num_nodes, pairs)
    }

    /// Like [`Graph::from_edge_list`] but with an explicit node count, so
    /// trailing isolated nodes are reported as disconnection rather than
    /// silently dropped.
    pub fn with_nodes(num_nodes: usize, pairs: &[(usize, usize)]) -> Result<Self, GraphError> {
        let (edges, offsets, neighbors) = build_adjacency(num_nodes, pairs)?;
        if num_nodes > 1 && edges.is_empty() {
            return Err(GraphError::EmptyInput);
        }
        let comps = count_components(num_nodes, &offsets, &neighbors);
        if comps != 1 {
            return Err(GraphError::Disconnected(comps));
        }
        Ok(Self {
            num_nodes,
            edges,
            offsets,
            neighbors,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Canonical `(min, max)` edges in sorted order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes).map(|u| self.degree(u)).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_nodes && v < self.num_nodes && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// A connected graph is a tree iff it has exactly `n - 1` edges.
    pub fn is_tree(&self) -> bool {
        self.edges.len() + 1 == self.num_nodes
    }

    /// Hop distances from `source` (BFS).
    pub fn bfs(&self, source: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.num_nodes];
        self.bfs_into(source, &mut dist, &mut VecDeque::new());
        dist
    }

    fn bfs_into(&self, source: usize, dist: &mut [u32], queue: &mut VecDeque<usize>) {
        dist.fill(u32::MAX);
        dist[source] = 0;
        queue.clear();
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let next = dist[u] + 1;
            for &v in self.neighbors(u) {
                if dist[v] == u32::MAX {
                    dist[v] = next;
                    queue.push_back(v);
                }
            }
        }
    }

    /// Parses the `graph.edges` text format: one `u v` pair per line,
    /// `#` comment lines and blank lines ignored.
    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split(' ');
            let parse = |tok: Option<&str>| -> Result<usize, GraphError> {
                tok.ok_or_else(|| GraphError::Parse {
                    line: i + 1,
                    msg: "expected two node indices".into(),
                })?
                .parse::<usize>()
                .map_err(|e| GraphError::Parse {
                    line: i + 1,
                    msg: e.to_string(),
                })
            };
            let u = parse(it.next())?;
            let v = parse(it.next())?;
            if it.next().is_some() {
                return Err(GraphError::Parse {
                    line: i + 1,
                    msg: "trailing tokens".into(),
                });
            }
            pairs.push((u, v));
        }
        Self::from_edge_list(&pairs)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edges.len() * 10);
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn read_edge_file(path: &Path) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path).map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))?;
        Self::parse_edge_list(&text)
    }
}

type Adjacency = (Vec<(usize, usize)>, Vec<usize>, Vec<usize>);

fn build_adjacency(num_nodes: usize, pairs: &[(usize, usize)]) -> Result<Adjacency, GraphError> {
    let mut edges = Vec::with_capacity(pairs.len());
    for &(u, v) in pairs {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        for node in [u, v] {
            if node >= num_nodes {
                return Err(GraphError::IndexOutOfRange { node, num_nodes });
            }
        }
        edges.push((u.min(v), u.max(v)));
    }
    edges.sort_unstable();
    edges.dedup();

    let mut counts = vec![0usize; num_nodes + 1];
    for &(u, v) in &edges {
        counts[u + 1] += 1;
        counts[v + 1] += 1;
    }
    for i in 0..num_nodes {
        counts[i + 1] += counts[i];
    }
    let offsets = counts;
    let mut fill = offsets.clone();
    let mut neighbors = vec![0usize; offsets[num_nodes]];
    for &(u, v) in &edges {
        neighbors[fill[u]] = v;
        fill[u] += 1;
        neighbors[fill[v]] = u;
        fill[v] += 1;
    }
    for u in 0..num_nodes {
        neighbors[offsets[u]..offsets[u + 1]].sort_unstable();
    }
    Ok((edges, offsets, neighbors))
}

fn count_components(num_nodes: usize, offsets: &[usize], neighbors: &[usize]) -> usize {
    let mut seen = vec![false; num_nodes];
    let mut stack = Vec::new();
    let mut comps = 0;
    for s in 0..num_nodes {
        if seen[s] {
            continue;
        }
        comps += 1;
        seen[s] = true;
        stack.push(s);
        while let Some(u) = stack.pop() {
            for &v in &neighbors[offsets[u]..offsets[u + 1]] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    comps
}

/// Dense matrix of shortest-path hop counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    num_nodes: usize,
    d: Vec<u16>,
}

impl DistanceMatrix {
    /// Wraps a row-major `n × n` hop matrix. Callers are trusted to supply a
    /// metric; used by tests and by the block decomposition in
    /// [`crate::hyperbolicity`].
    pub fn from_raw(num_nodes: usize, d: Vec<u16>) -> Self {
        assert_eq!(d.len(), num_nodes * num_nodes, "distance matrix shape");
        Self { num_nodes, d }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> u16 {
        self.d[u * self.num_nodes + v]
    }

    pub fn row(&self, u: usize) -> &[u16] {
        &self.d[u * self.num_nodes..(u + 1) * self.num_nodes]
    }

    pub fn max_distance(&self) -> u16 {
        self.d.iter().copied().max().unwrap_or(0)
    }

    /// Restriction to `nodes` (in the given order).
    pub fn submatrix(&self, nodes: &[usize]) -> DistanceMatrix {
        let k = nodes.len();
        let mut d = Vec::with_capacity(k * k);
        for &u in nodes {
            let row = self.row(u);
            d.extend(nodes.iter().map(|&v| row[v]));
        }
        DistanceMatrix { num_nodes: k, d }
    }
}

/// Exact unweighted all-pairs shortest paths, one BFS per source.
///
/// Rows are filled independently, so the parallel result is identical to a
/// sequential run.
pub fn apsp(g: &Graph) -> Result<DistanceMatrix, GraphError> {
    let n = g.num_nodes();
    if n > u16::MAX as usize + 1 {
        // eccentricity can reach n - 1
        return Err(GraphError::DistanceOverflow);
    }
    let mut d = vec![0u16; n * n];
    d.par_chunks_mut(n.max(1)).enumerate().for_each_init(
        || (vec![u32::MAX; n], VecDeque::with_capacity(n)),
        |(dist, queue), (s, row)| {
            g.bfs_into(s, dist, queue);
            for (out, &hops) in row.iter_mut().zip(dist.iter()) {
                *out = hops as u16;
            }
        },
    );
    Ok(DistanceMatrix { num_nodes: n, d })
}

pub fn degrees(g: &Graph) -> Vec<usize> {
    g.degrees()
}
