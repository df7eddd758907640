use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UscoError};
use crate::rng;

#[derive(Clone, Debug, Serialize, Deserialize)]
struct GraphRecord {
    node_count: usize,
    directed: bool,
    edges: Vec<(usize, usize)>,
}

/// Simple graph with indexed edges. Undirected edges are traversable both
/// ways and share one index.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "GraphRecord", into = "GraphRecord")]
pub struct Graph {
    node_count: usize,
    directed: bool,
    edges: Vec<(usize, usize)>,
    /// `out_adj[u]` holds `(v, edge)` sorted by `v`.
    out_adj: Vec<Vec<(usize, usize)>>,
    in_adj: Vec<Vec<(usize, usize)>>,
    index: HashMap<(usize, usize), usize>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.node_count == other.node_count
            && self.directed == other.directed
            && self.edges == other.edges
    }
}

impl TryFrom<GraphRecord> for Graph {
    type Error = UscoError;

    fn try_from(r: GraphRecord) -> Result<Self> {
        Graph::new(r.node_count, r.edges, r.directed)
    }
}

impl From<Graph> for GraphRecord {
    fn from(g: Graph) -> Self {
        GraphRecord {
            node_count: g.node_count,
            directed: g.directed,
            edges: g.edges,
        }
    }
}

impl Graph {
    pub fn new(node_count: usize, edges: Vec<(usize, usize)>, directed: bool) -> Result<Self> {
        let mut index = HashMap::with_capacity(edges.len());
        let mut out_adj = vec![Vec::new(); node_count];
        let mut in_adj = vec![Vec::new(); node_count];
        for (e, &(u, v)) in edges.iter().enumerate() {
            if u >= node_count || v >= node_count {
                return Err(UscoError::Domain(format!(
                    "edge {e} = ({u}, {v}) out of range for {node_count} nodes"
                )));
            }
            if u == v {
                return Err(UscoError::Domain(format!("edge {e} is a self-loop at {u}")));
            }
            let key = if directed { (u, v) } else { (u.min(v), u.max(v)) };
            if index.insert(key, e).is_some() {
                return Err(UscoError::Domain(format!("duplicate edge ({u}, {v})")));
            }
            out_adj[u].push((v, e));
            in_adj[v].push((u, e));
            if !directed {
                out_adj[v].push((u, e));
                in_adj[u].push((v, e));
            }
        }
        for list in out_adj.iter_mut().chain(in_adj.iter_mut()) {
            list.sort_unstable();
        }
        Ok(Graph {
            node_count,
            directed,
            edges,
            out_adj,
            in_adj,
            index,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn out_neighbors(&self, u: usize) -> &[(usize, usize)] {
        &self.out_adj[u]
    }

    pub fn in_neighbors(&self, u: usize) -> &[(usize, usize)] {
        &self.in_adj[u]
    }

    /// Index of the edge traversed when stepping `u -> v`.
    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        let key = if self.directed { (u, v) } else { (u.min(v), u.max(v)) };
        self.index.get(&key).copied()
    }

    /// Nodes reachable from `source`, itself included.
    pub fn reachable_from(&self, source: usize) -> Vec<bool> {
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![source];
        seen[source] = true;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.out_adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

/// Undirected stochastic-Kronecker-style graph on `2^levels` nodes with
/// exactly `target_edges` edges, made connected by linking stray
/// components to the largest one.
pub fn kronecker_graph(levels: u32, target_edges: usize, seed: u64) -> Result<Graph> {
    let n = 1usize << levels;
    let max_edges = n * (n - 1) / 2;
    if target_edges < n - 1 || target_edges > max_edges {
        return Err(UscoError::Domain(format!(
            "cannot build a connected simple graph with {n} nodes and {target_edges} edges"
        )));
    }
    // initiator probabilities, row-major 2x2
    const INIT: [f64; 4] = [0.9, 0.6, 0.6, 0.3];
    let total: f64 = INIT.iter().sum();
    let mut rng = rng::stream(seed, "kronecker", 0);
    let mut set = BTreeSet::new();

    let ball_budget = target_edges * 4 / 5;
    let mut attempts = 0usize;
    while set.len() < ball_budget && attempts < 100 * target_edges {
        attempts += 1;
        let (mut u, mut v) = (0usize, 0usize);
        for _ in 0..levels {
            let mut r = rng.random::<f64>() * total;
            let mut cell = 3;
            for (i, p) in INIT.iter().enumerate() {
                if r < *p {
                    cell = i;
                    break;
                }
                r -= p;
            }
            u = 2 * u + cell / 2;
            v = 2 * v + cell % 2;
        }
        if u != v {
            set.insert((u.min(v), u.max(v)));
        }
    }

    // union-find over what we have, then stitch components onto the largest
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(u, v) in &set {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
        }
    }
    let mut comp_size = vec![0usize; n];
    for u in 0..n {
        let r = find(&mut parent, u);
        comp_size[r] += 1;
    }
    let main = (0..n).max_by_key(|&r| (comp_size[r], std::cmp::Reverse(r))).unwrap_or(0);
    for u in 0..n {
        let root = find(&mut parent, main);
        if find(&mut parent, u) == root {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&x| find(&mut parent, x) == root).collect();
        let anchor = members[rng.random_range(0..members.len())];
        set.insert((u.min(anchor), u.max(anchor)));
        let ru = find(&mut parent, u);
        parent[ru] = root;
    }

    while set.len() < target_edges {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            set.insert((u.min(v), u.max(v)));
        }
    }
    // stitching may overshoot when the ball phase left many fragments
    let mut edges: Vec<(usize, usize)> = set.into_iter().collect();
    while edges.len() > target_edges {
        let i = rng.random_range(0..edges.len());
        let (u, v) = edges[i];
        let trial: Vec<_> = edges.iter().copied().filter(|&e| e != (u, v)).collect();
        let g = Graph::new(n, trial.clone(), false)?;
        if g.reachable_from(0).iter().all(|&s| s) {
            edges = trial;
        }
    }
    Graph::new(n, edges, false)
}
