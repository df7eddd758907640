use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UscoError};
use crate::rng;

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CoverGraphRecord {
    left: usize,
    right: usize,
    edges: Vec<(usize, usize)>,
}

/// Bipartite graph between left nodes (the sets) and right nodes (the
/// elements). Edge `e = (v, r)` means set `v` may cover element `r`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "CoverGraphRecord", into = "CoverGraphRecord")]
pub struct CoverGraph {
    left: usize,
    right: usize,
    edges: Vec<(usize, usize)>,
    /// `adj[v]` holds `(r, edge)` sorted by `r`.
    adj: Vec<Vec<(usize, usize)>>,
}

impl PartialEq for CoverGraph {
    fn eq(&self, other: &Self) -> bool {
        self.left == other.left && self.right == other.right && self.edges == other.edges
    }
}

impl TryFrom<CoverGraphRecord> for CoverGraph {
    type Error = UscoError;

    fn try_from(r: CoverGraphRecord) -> Result<Self> {
        CoverGraph::new(r.left, r.right, r.edges)
    }
}

impl From<CoverGraph> for CoverGraphRecord {
    fn from(g: CoverGraph) -> Self {
        CoverGraphRecord {
            left: g.left,
            right: g.right,
            edges: g.edges,
        }
    }
}

impl CoverGraph {
    pub fn new(left: usize, right: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); left];
        let mut seen = HashSet::with_capacity(edges.len());
        for (e, &(v, r)) in edges.iter().enumerate() {
            if v >= left || r >= right {
                return Err(UscoError::Domain(format!(
                    "edge {e} = ({v}, {r}) out of range for {left} x {right}"
                )));
            }
            if !seen.insert((v, r)) {
                return Err(UscoError::Domain(format!("duplicate edge ({v}, {r})")));
            }
            adj[v].push((r, e));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(CoverGraph {
            left,
            right,
            edges,
            adj,
        })
    }

    pub fn left_count(&self) -> usize {
        self.left
    }

    pub fn right_count(&self) -> usize {
        self.right
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `(r, edge)` pairs leaving left node `v`, sorted by `r`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }
}

/// Random bipartite graph where every left node links to a uniform number
/// of distinct right nodes in `1..=max_degree`.
pub fn random_cover_graph(left: usize, right: usize, max_degree: usize, seed: u64) -> Result<CoverGraph> {
    if right == 0 || max_degree == 0 {
        return Err(UscoError::Domain("cover graph needs right nodes and max_degree >= 1".into()));
    }
    let mut rng = rng::stream(seed, "cover-graph", 0);
    let mut edges = Vec::new();
    for v in 0..left {
        let d = rng.random_range(1..=max_degree.min(right));
        let mut picked = index::sample(&mut rng, right, d).into_vec();
        picked.sort_unstable();
        edges.extend(picked.into_iter().map(|r| (v, r)));
    }
    CoverGraph::new(left, right, edges)
}

pub const DESK_COVER_SEED: u64 = 20_211_207;

/// 200 x 500 coverage instance used by the desk presets.
pub fn desk_cover_graph() -> CoverGraph {
    random_cover_graph(200, 500, 15, DESK_COVER_SEED).expect("desk cover graph parameters are valid")
}
