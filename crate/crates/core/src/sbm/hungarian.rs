//! Minimum-cost perfect assignment (Kuhn-Munkres with potentials) and the
//! lexicographically smallest optimal assignment.

use crate::error::{Result, UscoError};

/// Relative tolerance for calling a reduced cost zero.
const TIGHT_REL: f64 = 1e-9;

/// Row-to-column assignment minimizing total cost of the row-major `n x n`
/// matrix. Among optimal assignments the lexicographically smallest column
/// vector is returned.
pub fn hungarian(costs: &[f64], n: usize) -> Result<Vec<usize>> {
    if costs.len() != n * n {
        return Err(UscoError::Domain(format!(
            "cost matrix has {} entries, expected {n} x {n}",
            costs.len()
        )));
    }
    if let Some(i) = costs.iter().position(|c| !c.is_finite()) {
        return Err(UscoError::Domain(format!(
            "cost ({}, {}) is not finite",
            i / n,
            i % n
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let (assign, u, v) = solve(costs, n);
    let scale = costs.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(1.0);
    let tight = |i: usize, j: usize| (costs[i * n + j] - u[i] - v[j]).abs() <= TIGHT_REL * scale;
    Ok(lex_smallest(assign, n, tight))
}

/// Shortest-augmenting-path Hungarian. Returns the assignment and the row
/// and column potentials, which are dual optimal.
fn solve(a: &[f64], n: usize) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    // 1-based with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = a[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
    }
    (assign, u[1..].to_vec(), v[1..].to_vec())
}

/// Walks rows in order, moving each to the smallest column that still
/// admits a perfect matching of the remaining rows inside the tight graph.
/// Every optimal assignment lives in the tight graph of an optimal dual, so
/// the result is the lexicographically smallest optimum.
fn lex_smallest(mut assign: Vec<usize>, n: usize, tight: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    let mut owner = vec![0usize; n];
    for (i, &j) in assign.iter().enumerate() {
        owner[j] = i;
    }
    for i in 0..n {
        for j in 0..assign[i] {
            if !tight(i, j) {
                continue;
            }
            // rows before i are fixed, so the owner of j is a later row
            let displaced = owner[j];
            if displaced < i {
                continue;
            }
            let freed = assign[i];
            let mut visited = vec![false; n];
            let mut path = Vec::new();
            if reroute(displaced, freed, i, &assign, &owner, &tight, &mut visited, &mut path) {
                // path lists (row, new column) moves for the displaced chain
                assign[i] = j;
                owner[j] = i;
                for &(r, c) in &path {
                    assign[r] = c;
                    owner[c] = r;
                }
                break;
            }
        }
    }
    assign
}

/// Alternating path from `row` (just lost its column) to the free column
/// `target`, using rows after `fixed` only.
#[allow(clippy::too_many_arguments)]
fn reroute(
    row: usize,
    target: usize,
    fixed: usize,
    assign: &[usize],
    owner: &[usize],
    tight: &impl Fn(usize, usize) -> bool,
    visited: &mut [bool],
    path: &mut Vec<(usize, usize)>,
) -> bool {
    visited[row] = true;
    let n = assign.len();
    if tight(row, target) {
        path.push((row, target));
        return true;
    }
    for c in 0..n {
        if c == assign[row] || c == target || !tight(row, c) {
            continue;
        }
        let next = owner[c];
        if next <= fixed || visited[next] {
            continue;
        }
        path.push((row, c));
        if reroute(next, target, fixed, assign, owner, tight, visited, path) {
            return true;
        }
        path.pop();
    }
    false
}

pub fn assignment_cost(costs: &[f64], n: usize, assign: &[usize]) -> f64 {
    assign.iter().enumerate().map(|(i, &j)| costs[i * n + j]).sum()
}
