//! Stochastic maximum coverage.
//!
//! A configuration is the subset of bipartite edges that appear; the
//! objective counts target elements adjacent to some chosen left node.

pub mod graph;
pub mod greedy;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result, UscoError};
use crate::framework::{ConfigSource, ConfigurationSample, DistSpec, Family, Problem, Sense, WeightVector};
use crate::rng;

pub use graph::{desk_cover_graph, random_cover_graph, CoverGraph};
pub use greedy::{greedy_chain, greedy_oracle, lazy_greedy, plain_greedy, CoverScorer};

/// Keep probability of each edge under the uninformed distribution.
pub const UNI_KEEP_PROB: f64 = 0.1;

/// `1 - 1/e`.
pub const GREEDY_ALPHA: f64 = 1.0 - 1.0 / std::f64::consts::E;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeProbLaw {
    pub probs: Vec<f64>,
}

impl EdgeProbLaw {
    pub fn validate(&self, graph: &CoverGraph) -> Result<()> {
        check_len(graph.edge_count(), self.probs.len())?;
        match self.probs.iter().position(|p| !(*p > 0.0 && *p < 1.0)) {
            Some(e) => Err(UscoError::Domain(format!(
                "edge {e} has probability {} outside (0, 1)",
                self.probs[e]
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct SscConfigRecord {
    edge_count: usize,
    present: Vec<usize>,
}

/// Present-edge subset stored as a bitset; serialized as a sorted id list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SscConfigRecord", into = "SscConfigRecord")]
pub struct SscConfig {
    edge_count: usize,
    bits: Vec<u64>,
}

impl TryFrom<SscConfigRecord> for SscConfig {
    type Error = UscoError;

    fn try_from(r: SscConfigRecord) -> Result<Self> {
        SscConfig::from_edges(r.edge_count, &r.present)
    }
}

impl From<SscConfig> for SscConfigRecord {
    fn from(c: SscConfig) -> Self {
        SscConfigRecord {
            edge_count: c.edge_count,
            present: c.iter_present().collect(),
        }
    }
}

impl SscConfig {
    pub fn empty(edge_count: usize) -> Self {
        SscConfig {
            edge_count,
            bits: vec![0; edge_count.div_ceil(64)],
        }
    }

    pub fn full(edge_count: usize) -> Self {
        let mut c = Self::empty(edge_count);
        for e in 0..edge_count {
            c.insert(e);
        }
        c
    }

    pub fn from_edges(edge_count: usize, present: &[usize]) -> Result<Self> {
        let mut c = Self::empty(edge_count);
        for &e in present {
            if e >= edge_count {
                return Err(UscoError::Domain(format!("edge id {e} out of range for {edge_count} edges")));
            }
            c.insert(e);
        }
        Ok(c)
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn insert(&mut self, e: usize) {
        self.bits[e / 64] |= 1 << (e % 64);
    }

    pub fn contains(&self, e: usize) -> bool {
        self.bits[e / 64] & (1 << (e % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter_present(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edge_count).filter(|&e| self.contains(e))
    }
}

/// Target elements `R*` (sorted, distinct) and the budget `k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SscInput {
    pub targets: Vec<usize>,
    pub budget: usize,
}

impl SscInput {
    /// Sorts and deduplicates `targets`.
    pub fn new(mut targets: Vec<usize>, budget: usize) -> Self {
        targets.sort_unstable();
        targets.dedup();
        SscInput { targets, budget }
    }

    pub fn validate(&self, graph: &CoverGraph) -> Result<()> {
        if self.targets.is_empty() {
            return Err(UscoError::Domain("target set is empty".into()));
        }
        if !self.targets.windows(2).all(|w| w[0] < w[1]) {
            return Err(UscoError::Domain("targets must be sorted and distinct".into()));
        }
        if let Some(&r) = self.targets.last().filter(|&&r| r >= graph.right_count()) {
            return Err(UscoError::Domain(format!("target {r} out of range")));
        }
        if self.budget == 0 || self.budget > graph.left_count() {
            return Err(UscoError::Domain(format!(
                "budget {} outside 1..={}",
                self.budget,
                graph.left_count()
            )));
        }
        Ok(())
    }
}

/// Chosen left nodes, sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SscSolution(pub Vec<usize>);

impl SscSolution {
    pub fn new(mut nodes: Vec<usize>) -> Self {
        nodes.sort_unstable();
        nodes.dedup();
        SscSolution(nodes)
    }
}

/// `|N_c(y) ∩ R*|`.
pub fn coverage_value(graph: &CoverGraph, config: &SscConfig, x: &SscInput, y: &SscSolution) -> usize {
    let mut hit = vec![false; graph.right_count()];
    let mut count = 0;
    for &v in &y.0 {
        for &(r, e) in graph.neighbors(v) {
            if !hit[r] && config.contains(e) && x.targets.binary_search(&r).is_ok() {
                hit[r] = true;
                count += 1;
            }
        }
    }
    count
}

/// `sum_{r in R*} (1 - prod_{v in y, (v,r) in E} (1 - p_(v,r)))`.
pub fn expected_coverage(graph: &CoverGraph, x: &SscInput, y: &SscSolution, law: &EdgeProbLaw) -> Result<f64> {
    check_len(graph.edge_count(), law.probs.len())?;
    let mut miss = vec![1.0; graph.right_count()];
    for &v in &y.0 {
        if v >= graph.left_count() {
            return Err(UscoError::Infeasible(format!("left node {v} out of range")));
        }
        for &(r, e) in graph.neighbors(v) {
            miss[r] *= 1.0 - law.probs[e];
        }
    }
    Ok(x.targets.iter().map(|&r| 1.0 - miss[r]).sum())
}

/// Greedy on the exact expected coverage; ties go to the smallest id.
pub fn greedy_expected(graph: &CoverGraph, law: &EdgeProbLaw, x: &SscInput) -> Result<SscSolution> {
    x.validate(graph)?;
    check_len(graph.edge_count(), law.probs.len())?;
    let mut is_target = vec![false; graph.right_count()];
    for &r in &x.targets {
        is_target[r] = true;
    }
    let mut miss = vec![1.0; graph.right_count()];
    let mut taken = vec![false; graph.left_count()];
    let mut chosen = Vec::new();
    while chosen.len() < x.budget {
        let mut best: Option<(f64, usize)> = None;
        for v in (0..graph.left_count()).filter(|&v| !taken[v]) {
            let g: f64 = graph
                .neighbors(v)
                .iter()
                .filter(|(r, _)| is_target[*r])
                .map(|&(r, e)| miss[r] * law.probs[e])
                .sum();
            if best.is_none_or(|(bg, _)| g > bg) {
                best = Some((g, v));
            }
        }
        match best {
            Some((g, v)) if g > 0.0 => {
                taken[v] = true;
                for &(r, e) in graph.neighbors(v) {
                    miss[r] *= 1.0 - law.probs[e];
                }
                chosen.push(v);
            }
            _ => break,
        }
    }
    Ok(SscSolution::new(chosen))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SscProblem {
    pub graph: CoverGraph,
}

impl SscProblem {
    pub fn new(graph: CoverGraph) -> Self {
        SscProblem { graph }
    }
}

impl Problem for SscProblem {
    type Input = SscInput;
    type Solution = SscSolution;
    type Config = SscConfig;
    type Scorer = CoverScorer;

    fn family(&self) -> Family {
        Family::Ssc
    }

    fn sense(&self) -> Sense {
        Sense::Maximize
    }

    fn alpha(&self) -> f64 {
        GREEDY_ALPHA
    }

    fn validate_input(&self, x: &SscInput) -> Result<()> {
        x.validate(&self.graph)
    }

    fn check_feasible(&self, x: &SscInput, y: &SscSolution) -> Result<()> {
        if y.0.len() > x.budget {
            return Err(UscoError::Infeasible(format!(
                "{} nodes chosen with budget {}",
                y.0.len(),
                x.budget
            )));
        }
        if !y.0.windows(2).all(|w| w[0] < w[1]) {
            return Err(UscoError::Infeasible("chosen nodes must be sorted and distinct".into()));
        }
        match y.0.last() {
            Some(&v) if v >= self.graph.left_count() => {
                Err(UscoError::Infeasible(format!("left node {v} out of range")))
            }
            _ => Ok(()),
        }
    }

    fn validate_config(&self, c: &SscConfig) -> Result<()> {
        check_len(self.graph.edge_count(), c.edge_count())
    }

    fn objective(&self, x: &SscInput, y: &SscSolution, c: &SscConfig) -> f64 {
        coverage_value(&self.graph, c, x, y) as f64
    }

    fn scorer(&self, sample: &ConfigurationSample<SscConfig>, weights: &WeightVector) -> Result<CoverScorer> {
        CoverScorer::new(&self.graph, sample, weights)
    }

    fn solve(&self, scorer: &CoverScorer, x: &SscInput) -> Result<SscSolution> {
        lazy_greedy(&self.graph, scorer, x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SscInstance {
    pub problem: SscProblem,
    pub law: EdgeProbLaw,
}

impl SscInstance {
    pub fn new(graph: CoverGraph, law: EdgeProbLaw) -> Result<Self> {
        law.validate(&graph)?;
        Ok(SscInstance {
            problem: SscProblem::new(graph),
            law,
        })
    }

    pub fn graph(&self) -> &CoverGraph {
        &self.problem.graph
    }
}

impl ConfigSource for SscInstance {
    type Config = SscConfig;

    fn sample_config(&self, dist: &DistSpec, seed: u64) -> Result<SscConfig> {
        sample_ssc_config(self.graph(), dist, Some(&self.law), seed)
    }
}

pub fn sample_ssc_config(
    graph: &CoverGraph,
    dist: &DistSpec,
    law: Option<&EdgeProbLaw>,
    seed: u64,
) -> Result<SscConfig> {
    let m = graph.edge_count();
    let mut rng = rng::rng_from_seed(seed);
    let mut c = SscConfig::empty(m);
    match dist {
        DistSpec::PhiUni => {
            for e in 0..m {
                if rng.random::<f64>() < UNI_KEEP_PROB {
                    c.insert(e);
                }
            }
        }
        DistSpec::PhiTrue => {
            let law = law.ok_or_else(|| UscoError::Config("phi_true needs the edge probability law".into()))?;
            check_len(m, law.probs.len())?;
            for (e, &p) in law.probs.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    return Err(UscoError::Domain(format!("edge {e} has probability {p}")));
                }
                if rng.random::<f64>() < p {
                    c.insert(e);
                }
            }
        }
        other => {
            return Err(UscoError::Config(format!(
                "distribution {other} is not defined for coverage"
            )))
        }
    }
    Ok(c)
}

/// Uniform `k`-subset of the left nodes.
pub fn ssc_rand_baseline(graph: &CoverGraph, x: &SscInput, rng_seed: u64) -> Result<SscSolution> {
    if x.budget > graph.left_count() {
        return Err(UscoError::Domain(format!(
            "budget {} exceeds {} left nodes",
            x.budget,
            graph.left_count()
        )));
    }
    let mut rng = rng::rng_from_seed(rng_seed);
    Ok(SscSolution::new(index::sample(&mut rng, graph.left_count(), x.budget).into_vec()))
}
