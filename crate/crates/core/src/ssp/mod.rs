//! Stochastic shortest path.
//!
//! A configuration is a positive weight per edge; `f(x, y, c)` is the length
//! of path `y` under those weights. The true law draws each edge weight from
//! its own Weibull distribution, so the expected length is additive over
//! edges and one Dijkstra call on aggregated weights solves any positive
//! affine combination exactly.

pub mod dijkstra;
pub mod dimacs;
pub mod graph;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, Weibull};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{check_len, Result, UscoError};
use crate::framework::{ConfigSource, ConfigurationSample, DistSpec, Family, Problem, Sense, WeightVector};
use crate::rng;

pub use dijkstra::{dijkstra_oracle, path_weight};
pub use dimacs::{parse_dimacs, DimacsGraph};
pub use graph::{kronecker_graph, Graph};

/// Upper end of the rescaled exponential weights.
pub const EXP_WEIGHT_MAX: f64 = 1e5;
/// Weibull parameters are drawn from `1..=WEIBULL_PARAM_MAX`.
pub const WEIBULL_PARAM_MAX: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SspInput {
    pub source: usize,
    pub target: usize,
}

impl SspInput {
    pub fn new(source: usize, target: usize) -> Self {
        SspInput { source, target }
    }

    pub fn validate(&self, graph: &Graph) -> Result<()> {
        let n = graph.node_count();
        if self.source >= n || self.target >= n {
            return Err(UscoError::Domain(format!(
                "input ({}, {}) out of range for {n} nodes",
                self.source, self.target
            )));
        }
        if self.source == self.target {
            return Err(UscoError::Domain(format!(
                "source and destination coincide at {}",
                self.source
            )));
        }
        Ok(())
    }
}

/// Node sequence of a simple path.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SspPath(pub Vec<usize>);

impl SspPath {
    /// Edge indices along the path, failing on a missing edge.
    pub fn edge_ids(&self, graph: &Graph) -> Result<Vec<usize>> {
        self.0
            .windows(2)
            .map(|w| {
                graph.edge_between(w[0], w[1]).ok_or_else(|| {
                    UscoError::Infeasible(format!("no edge {} -> {} in graph", w[0], w[1]))
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SspConfig {
    pub weights: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeibullParams {
    pub shape: u32,
    pub scale: u32,
}

impl WeibullParams {
    pub fn mean(&self) -> f64 {
        self.scale as f64 * gamma(1.0 + 1.0 / self.shape as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeibullEdgeLaw {
    pub params: Vec<WeibullParams>,
}

impl WeibullEdgeLaw {
    pub fn validate(&self, graph: &Graph) -> Result<()> {
        check_len(graph.edge_count(), self.params.len())?;
        for (e, p) in self.params.iter().enumerate() {
            let ok = |v: u32| (1..=WEIBULL_PARAM_MAX).contains(&v);
            if !ok(p.shape) || !ok(p.scale) {
                return Err(UscoError::Domain(format!(
                    "edge {e}: Weibull shape {} / scale {} outside 1..={WEIBULL_PARAM_MAX}",
                    p.shape, p.scale
                )));
            }
        }
        Ok(())
    }

    /// `E[w_e]` for every edge.
    pub fn mean_weights(&self) -> Vec<f64> {
        self.params.iter().map(WeibullParams::mean).collect()
    }
}

/// The shortest-path problem on a fixed graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SspProblem {
    pub graph: Graph,
}

impl SspProblem {
    pub fn new(graph: Graph) -> Self {
        SspProblem { graph }
    }
}

impl Problem for SspProblem {
    type Input = SspInput;
    type Solution = SspPath;
    type Config = SspConfig;
    type Scorer = Vec<f64>;

    fn family(&self) -> Family {
        Family::Ssp
    }

    fn sense(&self) -> Sense {
        Sense::Minimize
    }

    fn alpha(&self) -> f64 {
        1.0
    }

    fn validate_input(&self, x: &SspInput) -> Result<()> {
        x.validate(&self.graph)
    }

    fn check_feasible(&self, x: &SspInput, y: &SspPath) -> Result<()> {
        let nodes = &y.0;
        if nodes.first() != Some(&x.source) || nodes.last() != Some(&x.target) {
            return Err(UscoError::Infeasible(format!(
                "path must run from {} to {}",
                x.source, x.target
            )));
        }
        let mut seen = vec![false; self.graph.node_count()];
        for &u in nodes {
            if u >= seen.len() {
                return Err(UscoError::Infeasible(format!("node {u} out of range")));
            }
            if std::mem::replace(&mut seen[u], true) {
                return Err(UscoError::Infeasible(format!("path revisits node {u}")));
            }
        }
        y.edge_ids(&self.graph).map(|_| ())
    }

    fn validate_config(&self, c: &SspConfig) -> Result<()> {
        check_len(self.graph.edge_count(), c.weights.len())?;
        if c.weights.iter().all(|w| w.is_finite() && *w > 0.0) {
            Ok(())
        } else {
            Err(UscoError::Domain("configuration weights must be finite and > 0".into()))
        }
    }

    fn objective(&self, _x: &SspInput, y: &SspPath, c: &SspConfig) -> f64 {
        y.0.windows(2)
            .map(|w| {
                let e = self.graph.edge_between(w[0], w[1]).expect("feasible path");
                c.weights[e]
            })
            .sum()
    }

    fn scorer(&self, sample: &ConfigurationSample<SspConfig>, weights: &WeightVector) -> Result<Vec<f64>> {
        aggregate_edge_weights(self.graph.edge_count(), sample, weights)
    }

    fn solve(&self, scorer: &Vec<f64>, x: &SspInput) -> Result<SspPath> {
        dijkstra_oracle(&self.graph, scorer, x)
    }
}

/// Per-edge `sum_i w_i * c_i(e)`, summed in configuration order.
pub fn aggregate_edge_weights(
    edge_count: usize,
    sample: &ConfigurationSample<SspConfig>,
    weights: &WeightVector,
) -> Result<Vec<f64>> {
    check_len(sample.k(), weights.len())?;
    let mut agg = vec![0.0; edge_count];
    for (c, &w) in sample.payloads().zip(weights.as_slice()) {
        check_len(edge_count, c.weights.len())?;
        if w == 0.0 {
            continue;
        }
        for (a, &cw) in agg.iter_mut().zip(&c.weights) {
            *a += w * cw;
        }
    }
    Ok(agg)
}

/// Graph plus its ground-truth edge law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SspInstance {
    pub problem: SspProblem,
    pub law: WeibullEdgeLaw,
}

impl SspInstance {
    pub fn new(graph: Graph, law: WeibullEdgeLaw) -> Result<Self> {
        law.validate(&graph)?;
        Ok(SspInstance {
            problem: SspProblem::new(graph),
            law,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.problem.graph
    }
}

impl ConfigSource for SspInstance {
    type Config = SspConfig;

    fn sample_config(&self, dist: &DistSpec, seed: u64) -> Result<SspConfig> {
        sample_ssp_config(self.graph(), dist, Some(&self.law), seed)
    }
}

pub fn sample_ssp_config(
    graph: &Graph,
    dist: &DistSpec,
    law: Option<&WeibullEdgeLaw>,
    seed: u64,
) -> Result<SspConfig> {
    let mut rng = rng::rng_from_seed(seed);
    let m = graph.edge_count();
    let weights = match dist {
        DistSpec::PhiExp => {
            let raw: Vec<f64> = (0..m).map(|_| Exp1.sample(&mut rng)).collect();
            let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if m == 0 || hi <= lo {
                vec![1.0; m]
            } else {
                raw.iter()
                    .map(|r| 1.0 + (r - lo) / (hi - lo) * (EXP_WEIGHT_MAX - 1.0))
                    .collect()
            }
        }
        DistSpec::PhiNorm => (0..m)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                g.abs() * 1e3 + 1.0
            })
            .collect(),
        DistSpec::PhiTrue => {
            let law = law.ok_or_else(|| UscoError::Config("phi_true needs the Weibull edge law".into()))?;
            check_len(m, law.params.len())?;
            law.params
                .iter()
                .map(|p| {
                    let d = Weibull::new(p.scale as f64, p.shape as f64)
                        .map_err(|e| UscoError::Domain(format!("Weibull law: {e}")))?;
                    Ok(d.sample(&mut rng))
                })
                .collect::<Result<Vec<_>>>()?
        }
        other => {
            return Err(UscoError::Config(format!(
                "distribution {other} is not defined for shortest path"
            )))
        }
    };
    Ok(SspConfig { weights })
}

/// `F(x, y, phi_true)`: sum of Weibull means along the path.
pub fn expected_path_length(graph: &Graph, path: &SspPath, law: &WeibullEdgeLaw) -> Result<f64> {
    check_len(graph.edge_count(), law.params.len())?;
    Ok(path.edge_ids(graph)?.into_iter().map(|e| law.params[e].mean()).sum())
}

/// Dijkstra on i.i.d. uniform `[0, 1)` edge weights.
pub fn ssp_base_baseline(graph: &Graph, x: &SspInput, rng_seed: u64) -> Result<SspPath> {
    let mut rng = rng::rng_from_seed(rng_seed);
    let weights: Vec<f64> = (0..graph.edge_count()).map(|_| rng.random::<f64>()).collect();
    dijkstra_oracle(graph, &weights, x)
}

/// Default seed of the shipped 64-node instance.
pub const DESK_GRAPH_SEED: u64 = 20_211_206;

/// 64-node, 160-edge Kronecker-style graph used by the desk presets.
pub fn desk_graph() -> Graph {
    kronecker_graph(6, 160, DESK_GRAPH_SEED).expect("desk graph parameters are valid")
}
