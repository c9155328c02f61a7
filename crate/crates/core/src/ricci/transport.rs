//! Exact solver for the balanced transportation problem.
//!
//! Primal transportation simplex: north-west corner start, u/v potentials on
//! the basis tree, Bland's rule for the entering and leaving cells so
//! degenerate pivots cannot cycle.

use std::collections::VecDeque;

use super::RicciError;

/// Optimal flow and its cost.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub cost: f64,
    /// Row-major `supply.len() × demand.len()` flow matrix.
    pub flow: Vec<f64>,
}

/// Minimises `Σ cost[i][j]·x[i][j]` subject to row sums `supply` and column
/// sums `demand`. Both sides must be positive and carry equal total mass.
pub fn solve(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<TransportPlan, RicciError> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 || cost.len() != m * n {
        return Err(RicciError::SolverFailure("empty or mis-shaped problem".into()));
    }
    let total_s: f64 = supply.iter().sum();
    let total_d: f64 = demand.iter().sum();
    if (total_s - total_d).abs() > 1e-9 * total_s.max(1.0) {
        return Err(RicciError::SolverFailure(format!(
            "unbalanced problem: supply {total_s} vs demand {total_d}"
        )));
    }

    let mut flow = vec![0.0; m * n];
    let mut basic = vec![false; m * n];
    let mut basis: Vec<(usize, usize)> = Vec::with_capacity(m + n - 1);
    {
        let mut a = supply.to_vec();
        let mut b = demand.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let q = a[i].min(b[j]).max(0.0);
            flow[i * n + j] = q;
            basic[i * n + j] = true;
            basis.push((i, j));
            a[i] -= q;
            b[j] -= q;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if j == n - 1 || (i < m - 1 && a[i] <= b[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let scale = cost.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
    let tol = 1e-12 * scale;
    let max_iter = 50 * (m + n) * (m + n) + 1000;
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];

    for _ in 0..max_iter {
        potentials(m, n, cost, &basis, &mut u, &mut v)?;
        let entering = (0..m * n).find(|&k| !basic[k] && cost[k] - u[k / n] - v[k % n] < -tol);
        let Some(k) = entering else {
            let total = flow.iter().zip(cost).map(|(x, c)| x * c).sum();
            return Ok(TransportPlan { cost: total, flow });
        };
        let (ei, ej) = (k / n, k % n);
        // cycle: entering (+), then alternating along the tree path from row ei to column ej
        let path = tree_path(m, n, &basis, ei, ej)?;
        let mut theta = f64::INFINITY;
        let mut leave_pos = usize::MAX;
        let mut leave_idx = usize::MAX;
        for (pos, &(i, j)) in path.iter().enumerate().step_by(2) {
            let idx = i * n + j;
            let x = flow[idx];
            if x < theta || (x == theta && idx < leave_idx) {
                (theta, leave_pos, leave_idx) = (x, pos, idx);
            }
        }
        for (pos, &(i, j)) in path.iter().enumerate() {
            if pos % 2 == 0 {
                flow[i * n + j] -= theta;
            } else {
                flow[i * n + j] += theta;
            }
        }
        flow[k] = theta;
        let (li, lj) = path[leave_pos];
        flow[li * n + lj] = 0.0;
        basic[li * n + lj] = false;
        basic[k] = true;
        let slot = basis.iter().position(|&c| c == (li, lj)).expect("leaving cell is basic");
        basis[slot] = (ei, ej);
    }
    Err(RicciError::SolverFailure("iteration limit reached".into()))
}

/// Solves u_i + v_j = c_ij over the basis tree with u_0 = 0.
fn potentials(m: usize, n: usize, cost: &[f64], basis: &[(usize, usize)], u: &mut [f64], v: &mut [f64]) -> Result<(), RicciError> {
    let adj = basis_adjacency(m, n, basis);
    let mut seen = vec![false; m + n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    u[0] = 0.0;
    while let Some(node) = queue.pop_front() {
        for &other in &adj[node] {
            if seen[other] {
                continue;
            }
            seen[other] = true;
            if node < m {
                let (i, j) = (node, other - m);
                v[j] = cost[i * n + j] - u[i];
            } else {
                let (i, j) = (other, node - m);
                u[i] = cost[i * n + j] - v[j];
            }
            queue.push_back(other);
        }
    }
    if seen.iter().all(|&s| s) {
        Ok(())
    } else {
        Err(RicciError::SolverFailure("basis is not a spanning tree".into()))
    }
}

fn basis_adjacency(m: usize, n: usize, basis: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); m + n];
    for &(i, j) in basis {
        adj[i].push(m + j);
        adj[m + j].push(i);
    }
    adj
}

/// Basis cells on the tree path from row node `from_row` to column node
/// `to_col`, in order starting at the row end.
fn tree_path(m: usize, n: usize, basis: &[(usize, usize)], from_row: usize, to_col: usize) -> Result<Vec<(usize, usize)>, RicciError> {
    let adj = basis_adjacency(m, n, basis);
    let mut parent = vec![usize::MAX; m + n];
    let target = m + to_col;
    let mut queue = VecDeque::from([from_row]);
    parent[from_row] = from_row;
    while let Some(node) = queue.pop_front() {
        if node == target {
            break;
        }
        for &other in &adj[node] {
            if parent[other] == usize::MAX {
                parent[other] = node;
                queue.push_back(other);
            }
        }
    }
    if parent[target] == usize::MAX {
        return Err(RicciError::SolverFailure("entering cell closes no cycle".into()));
    }
    let mut cells = Vec::new();
    let mut node = target;
    while node != from_row {
        let prev = parent[node];
        let cell = if prev < m { (prev, node - m) } else { (node, prev - m) };
        cells.push(cell);
        node = prev;
    }
    cells.reverse();
    Ok(cells)
}
