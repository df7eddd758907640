//! Stochastic minimum-weight bipartite matching on a complete `n x n`
//! graph whose edge costs are Gaussian with `sigma = 0.3 mu`.

pub mod hungarian;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result, UscoError};
use crate::framework::{ConfigSource, ConfigurationSample, DistSpec, Family, Problem, Sense, WeightVector};
use crate::rng;

pub use hungarian::{assignment_cost, hungarian};

pub const SIGMA_RATIO: f64 = 0.3;
/// Floor applied to sampled costs so every configuration stays positive.
pub const COST_FLOOR: f64 = 1e-6;
pub const MU_RANGE: (f64, f64) = (1.0, 10.0);
pub const DESK_MATCH_SEED: u64 = 20_211_208;
pub const DESK_MATCH_SIZE: usize = 32;

/// Complete bipartite graph with per-edge mean costs, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchGraph {
    pub n: usize,
    pub mu: Vec<f64>,
}

impl MatchGraph {
    pub fn new(n: usize, mu: Vec<f64>) -> Result<Self> {
        let g = MatchGraph { n, mu };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(UscoError::Domain("matching graph needs n >= 1".into()));
        }
        check_len(self.n * self.n, self.mu.len())?;
        let (lo, hi) = MU_RANGE;
        match self.mu.iter().position(|m| !(lo..=hi).contains(m)) {
            Some(i) => Err(UscoError::Domain(format!(
                "mu[{}][{}] = {} outside [{lo}, {hi}]",
                i / self.n,
                i % self.n,
                self.mu[i]
            ))),
            None => Ok(()),
        }
    }

    pub fn mu_at(&self, l: usize, r: usize) -> f64 {
        self.mu[l * self.n + r]
    }

    pub fn sigma_at(&self, l: usize, r: usize) -> f64 {
        SIGMA_RATIO * self.mu_at(l, r)
    }

    /// Means drawn uniformly from `[1, 10]`.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(UscoError::Domain("matching graph needs n >= 1".into()));
        }
        let mut rng = rng::stream(seed, "match-graph", 0);
        let mu = (0..n * n).map(|_| rng.random_range(MU_RANGE.0..=MU_RANGE.1)).collect();
        MatchGraph::new(n, mu)
    }
}

pub fn desk_match_graph() -> MatchGraph {
    MatchGraph::random(DESK_MATCH_SIZE, DESK_MATCH_SEED).expect("desk matching parameters are valid")
}

/// One realized cost matrix, row-major `n x n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbmConfig {
    pub n: usize,
    pub costs: Vec<f64>,
}

/// Left subset and right subset of equal size, each sorted and distinct.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SbmInput {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

impl SbmInput {
    pub fn new(mut left: Vec<usize>, mut right: Vec<usize>) -> Self {
        left.sort_unstable();
        right.sort_unstable();
        SbmInput { left, right }
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.left.is_empty() || self.left.len() != self.right.len() {
            return Err(UscoError::Domain(format!(
                "need |L*| = |R*| >= 1, got {} and {}",
                self.left.len(),
                self.right.len()
            )));
        }
        for (side, ids) in [("left", &self.left), ("right", &self.right)] {
            if !ids.windows(2).all(|w| w[0] < w[1]) {
                return Err(UscoError::Domain(format!("{side} ids must be sorted and distinct")));
            }
            if let Some(&id) = ids.last().filter(|&&id| id >= n) {
                return Err(UscoError::Domain(format!("{side} id {id} out of range for n = {n}")));
            }
        }
        Ok(())
    }
}

/// Bijection `L* -> R*` as `(left, right)` pairs sorted by left id.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SbmMatching(pub Vec<(usize, usize)>);

impl SbmMatching {
    pub fn new(mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        SbmMatching(pairs)
    }
}

/// Minimum-cost bijection for `x` under a full `n x n` cost matrix.
pub fn hungarian_oracle(costs: &[f64], n: usize, x: &SbmInput) -> Result<SbmMatching> {
    check_len(n * n, costs.len())?;
    x.validate(n)?;
    let s = x.len();
    let mut sub = Vec::with_capacity(s * s);
    for &l in &x.left {
        for &r in &x.right {
            sub.push(costs[l * n + r]);
        }
    }
    let assign = hungarian(&sub, s)?;
    Ok(SbmMatching(
        x.left.iter().zip(assign).map(|(&l, j)| (l, x.right[j])).collect(),
    ))
}

/// `sum_{(l, r) in y} mu_(l, r)`.
pub fn expected_matching_cost(matching: &SbmMatching, graph: &MatchGraph) -> Result<f64> {
    let mut total = 0.0;
    for &(l, r) in &matching.0 {
        if l >= graph.n || r >= graph.n {
            return Err(UscoError::Infeasible(format!("pair ({l}, {r}) out of range")));
        }
        total += graph.mu_at(l, r);
    }
    Ok(total)
}

pub fn sample_sbm_config(graph: &MatchGraph, dist: &DistSpec, rng_seed: u64) -> Result<SbmConfig> {
    let mut rng = rng::rng_from_seed(rng_seed);
    let costs = match *dist {
        DistSpec::PhiUni => (0..graph.mu.len())
            .map(|_| rng.random_range(MU_RANGE.0..=MU_RANGE.1))
            .collect(),
        DistSpec::PhiQ { q } => {
            if !(q > 0.0) || !q.is_finite() {
                return Err(UscoError::Config(format!("phi_q needs q > 0, got {q}")));
            }
            graph
                .mu
                .iter()
                .map(|&m| {
                    let u: f64 = rng.random();
                    (m - q * m + 2.0 * q * m * u).max(COST_FLOOR)
                })
                .collect()
        }
        DistSpec::PhiTrue => graph
            .mu
            .iter()
            .map(|&m| {
                let d = Normal::new(m, SIGMA_RATIO * m)
                    .map_err(|e| UscoError::Domain(format!("cost law: {e}")))?;
                Ok(d.sample(&mut rng).max(COST_FLOOR))
            })
            .collect::<Result<Vec<_>>>()?,
        other => {
            return Err(UscoError::Config(format!(
                "distribution {other} is not defined for matching"
            )))
        }
    };
    Ok(SbmConfig { n: graph.n, costs })
}

/// Uniformly random bijection.
pub fn sbm_rand_baseline(x: &SbmInput, rng_seed: u64) -> Result<SbmMatching> {
    if x.left.is_empty() || x.left.len() != x.right.len() {
        return Err(UscoError::Domain("need |L*| = |R*| >= 1".into()));
    }
    let mut rng = rng::rng_from_seed(rng_seed);
    let mut right = x.right.clone();
    right.shuffle(&mut rng);
    Ok(SbmMatching::new(x.left.iter().copied().zip(right).collect()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbmProblem {
    pub n: usize,
}

impl Problem for SbmProblem {
    type Input = SbmInput;
    type Solution = SbmMatching;
    type Config = SbmConfig;
    /// Aggregated cost matrix.
    type Scorer = Vec<f64>;

    fn family(&self) -> Family {
        Family::Sbm
    }

    fn sense(&self) -> Sense {
        Sense::Minimize
    }

    fn alpha(&self) -> f64 {
        1.0
    }

    fn validate_input(&self, x: &SbmInput) -> Result<()> {
        x.validate(self.n)
    }

    fn check_feasible(&self, x: &SbmInput, y: &SbmMatching) -> Result<()> {
        if y.0.len() != x.len() {
            return Err(UscoError::Infeasible(format!(
                "matching has {} pairs for {} left nodes",
                y.0.len(),
                x.len()
            )));
        }
        let mut rights: Vec<usize> = Vec::with_capacity(y.0.len());
        for (&(l, r), &xl) in y.0.iter().zip(&x.left) {
            if l != xl {
                return Err(UscoError::Infeasible(format!("left node {l} is not matched in order")));
            }
            rights.push(r);
        }
        rights.sort_unstable();
        if rights != x.right {
            return Err(UscoError::Infeasible("matching image differs from R*".into()));
        }
        Ok(())
    }

    fn validate_config(&self, c: &SbmConfig) -> Result<()> {
        check_len(self.n, c.n)?;
        check_len(self.n * self.n, c.costs.len())?;
        if c.costs.iter().all(|w| w.is_finite() && *w > 0.0) {
            Ok(())
        } else {
            Err(UscoError::Domain("costs must be finite and > 0".into()))
        }
    }

    fn objective(&self, _x: &SbmInput, y: &SbmMatching, c: &SbmConfig) -> f64 {
        y.0.iter().map(|&(l, r)| c.costs[l * self.n + r]).sum()
    }

    fn scorer(&self, sample: &ConfigurationSample<SbmConfig>, weights: &WeightVector) -> Result<Vec<f64>> {
        check_len(sample.k(), weights.len())?;
        let mut agg = vec![0.0; self.n * self.n];
        for (c, &w) in sample.payloads().zip(weights.as_slice()) {
            check_len(agg.len(), c.costs.len())?;
            if w == 0.0 {
                continue;
            }
            for (a, &cw) in agg.iter_mut().zip(&c.costs) {
                *a += w * cw;
            }
        }
        Ok(agg)
    }

    fn solve(&self, scorer: &Vec<f64>, x: &SbmInput) -> Result<SbmMatching> {
        hungarian_oracle(scorer, self.n, x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatchGraph", into = "MatchGraph")]
pub struct SbmInstance {
    pub graph: MatchGraph,
    problem: SbmProblem,
}

impl TryFrom<MatchGraph> for SbmInstance {
    type Error = UscoError;

    fn try_from(g: MatchGraph) -> Result<Self> {
        SbmInstance::new(g)
    }
}

impl From<SbmInstance> for MatchGraph {
    fn from(i: SbmInstance) -> Self {
        i.graph
    }
}

impl SbmInstance {
    pub fn new(graph: MatchGraph) -> Result<Self> {
        graph.validate()?;
        Ok(SbmInstance {
            problem: SbmProblem { n: graph.n },
            graph,
        })
    }

    pub fn problem(&self) -> &SbmProblem {
        &self.problem
    }
}

impl ConfigSource for SbmInstance {
    type Config = SbmConfig;

    fn sample_config(&self, dist: &DistSpec, seed: u64) -> Result<SbmConfig> {
        sample_sbm_config(&self.graph, dist, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_maps_back_to_node_ids() {
        let n = 3;
        let mut costs = vec![9.0; 9];
        costs[2] = 1.0; // (0, 2)
        costs[2 * 3 + 1] = 1.0; // (2, 1)
        let x = SbmInput::new(vec![0, 2], vec![1, 2]);
        let y = hungarian_oracle(&costs, n, &x).unwrap();
        assert_eq!(y.0, vec![(0, 2), (2, 1)]);
        assert!(SbmProblem { n }.check_feasible(&x, &y).is_ok());
    }

    #[test]
    fn expected_costs_add_up() {
        let g = MatchGraph::new(2, vec![3.0, 1.0, 1.0, 5.0]).unwrap();
        assert_eq!(expected_matching_cost(&SbmMatching(vec![(0, 0)]), &g).unwrap(), 3.0);
        assert_eq!(expected_matching_cost(&SbmMatching(vec![(0, 0), (1, 1)]), &g).unwrap(), 8.0);
        let g = MatchGraph::new(1, vec![4.0]).unwrap();
        assert_eq!(expected_matching_cost(&SbmMatching(vec![(0, 0)]), &g).unwrap(), 4.0);
    }

    #[test]
    fn graph_law_invariants() {
        let g = desk_match_graph();
        assert!(g.mu.iter().all(|m| (1.0..=10.0).contains(m)));
        assert_eq!(g.sigma_at(3, 4) / g.mu_at(3, 4), SIGMA_RATIO);
        assert!(MatchGraph::random(0, 1).is_err());
        assert!(MatchGraph::new(1, vec![0.5]).is_err());
    }

    #[test]
    fn samplers() {
        let g = desk_match_graph();
        let c = sample_sbm_config(&g, &DistSpec::PhiUni, 3).unwrap();
        assert!(c.costs.iter().all(|w| (1.0..=10.0).contains(w)));
        let c = sample_sbm_config(&g, &DistSpec::PhiQ { q: 1e-12 }, 3).unwrap();
        for (w, m) in c.costs.iter().zip(&g.mu) {
            assert!((w - m).abs() <= 1e-10 * m);
        }
        let c = sample_sbm_config(&g, &DistSpec::PhiQ { q: 10.0 }, 3).unwrap();
        assert!(c.costs.iter().all(|&w| w >= COST_FLOOR));
        assert!(c.costs.iter().any(|&w| w == COST_FLOOR));
        assert!(sample_sbm_config(&g, &DistSpec::PhiExp, 3).is_err());
        assert_eq!(
            sample_sbm_config(&g, &DistSpec::PhiTrue, 8).unwrap(),
            sample_sbm_config(&g, &DistSpec::PhiTrue, 8).unwrap()
        );
    }

    #[test]
    fn rand_baseline_is_a_bijection() {
        let x = SbmInput::new(vec![4], vec![7]);
        assert_eq!(sbm_rand_baseline(&x, 0).unwrap().0, vec![(4, 7)]);
        let p = SbmProblem { n: 10 };
        let x = SbmInput::new(vec![0, 3, 5, 9], vec![1, 2, 6, 8]);
        for seed in 0..20 {
            let y = sbm_rand_baseline(&x, seed).unwrap();
            assert!(p.check_feasible(&x, &y).is_ok());
        }
    }
}
