//! Shortest paths with a deterministic tie rule: among minimum-weight paths
//! pick the fewest edges, then the lexicographically smallest node sequence.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::graph::Graph;
use super::{SspInput, SspPath};
use crate::error::{check_len, Result, UscoError};

#[derive(Clone, Copy, PartialEq)]
struct Key {
    dist: f64,
    hops: usize,
    node: usize,
}

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap
        other
            .dist
            .total_cmp(&self.dist)
            .then(other.hops.cmp(&self.hops))
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn lex_less(d1: f64, h1: usize, d2: f64, h2: usize) -> bool {
    d1 < d2 || (d1 == d2 && h1 < h2)
}

/// Distance and hop count from every node to `target`.
fn distances_to(graph: &Graph, weights: &[f64], target: usize) -> (Vec<f64>, Vec<usize>) {
    let n = graph.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut hops = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[target] = 0.0;
    hops[target] = 0;
    heap.push(Key {
        dist: 0.0,
        hops: 0,
        node: target,
    });
    while let Some(Key { node: b, .. }) = heap.pop() {
        if done[b] {
            continue;
        }
        done[b] = true;
        for &(a, e) in graph.in_neighbors(b) {
            if done[a] {
                continue;
            }
            let cand = weights[e] + dist[b];
            let cand_hops = hops[b] + 1;
            if lex_less(cand, cand_hops, dist[a], hops[a]) {
                dist[a] = cand;
                hops[a] = cand_hops;
                heap.push(Key {
                    dist: cand,
                    hops: cand_hops,
                    node: a,
                });
            }
        }
    }
    (dist, hops)
}

/// Minimum-weight path from `x.source` to `x.target` under nonnegative
/// per-edge weights.
pub fn dijkstra_oracle(graph: &Graph, edge_weights: &[f64], x: &SspInput) -> Result<SspPath> {
    check_len(graph.edge_count(), edge_weights.len())?;
    if let Some((e, w)) = edge_weights
        .iter()
        .enumerate()
        .find(|(_, w)| !(**w >= 0.0) || !w.is_finite())
    {
        return Err(UscoError::Domain(format!("edge {e} has weight {w}; need finite >= 0")));
    }
    x.validate(graph)?;

    let (dist, hops) = distances_to(graph, edge_weights, x.target);
    if !dist[x.source].is_finite() {
        return Err(UscoError::NoSolution(format!(
            "node {} is unreachable from {}",
            x.target, x.source
        )));
    }

    // walk tight edges; (dist, hops) strictly decreases so the walk is simple
    let mut path = vec![x.source];
    let mut a = x.source;
    while a != x.target {
        let next = graph.out_neighbors(a).iter().find(|&&(b, e)| {
            hops[b] != usize::MAX && hops[b] + 1 == hops[a] && edge_weights[e] + dist[b] == dist[a]
        });
        match next {
            Some(&(b, _)) => {
                path.push(b);
                a = b;
            }
            None => unreachable!("tight successor must exist on a settled node"),
        }
    }
    Ok(SspPath(path))
}

/// Total weight of `path` under `edge_weights`.
pub fn path_weight(graph: &Graph, edge_weights: &[f64], path: &SspPath) -> Result<f64> {
    let mut total = 0.0;
    for e in path.edge_ids(graph)? {
        total += edge_weights[e];
    }
    Ok(total)
}
