//! Greedy maximum coverage over a weighted family of edge subsets.
//!
//! The weighted objective `sum_i w_i * |N_{c_i}(y) ∩ R*|` is monotone
//! submodular, so marginal gains only shrink as `y` grows. [`lazy_greedy`]
//! exploits this with stale upper bounds; [`plain_greedy`] recomputes every
//! gain each round and serves as the reference. Both pick the smallest id
//! among maximal gains.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::graph::CoverGraph;
use super::{SscConfig, SscInput, SscSolution};
use crate::error::{check_len, Result, UscoError};
use crate::framework::{ConfigurationSample, WeightVector};

/// Active configurations transposed per edge.
#[derive(Clone, Debug)]
pub struct CoverScorer {
    weights: Vec<f64>,
    /// `present[e]`: ascending indices into `weights` of configurations
    /// containing edge `e`.
    present: Vec<Vec<u32>>,
}

impl CoverScorer {
    pub fn new(graph: &CoverGraph, sample: &ConfigurationSample<SscConfig>, weights: &WeightVector) -> Result<Self> {
        check_len(sample.k(), weights.len())?;
        let mut active = Vec::new();
        let mut present = vec![Vec::new(); graph.edge_count()];
        for (c, &w) in sample.payloads().zip(weights.as_slice()) {
            check_len(graph.edge_count(), c.edge_count())?;
            if !(w >= 0.0) || !w.is_finite() {
                return Err(UscoError::Domain(format!("greedy needs finite weights >= 0, got {w}")));
            }
            if w == 0.0 {
                continue;
            }
            let slot = active.len() as u32;
            active.push(w);
            for e in c.iter_present() {
                present[e].push(slot);
            }
        }
        Ok(CoverScorer {
            weights: active,
            present,
        })
    }

    fn words(&self) -> usize {
        self.weights.len().div_ceil(64)
    }
}

/// Per-input covered state: one bitset over active configurations for each
/// target element.
struct Coverage<'a> {
    graph: &'a CoverGraph,
    scorer: &'a CoverScorer,
    /// Target slot of each right node, if it is a target.
    slot: Vec<Option<usize>>,
    covered: Vec<u64>,
    words: usize,
}

impl<'a> Coverage<'a> {
    fn new(graph: &'a CoverGraph, scorer: &'a CoverScorer, x: &SscInput) -> Self {
        let mut slot = vec![None; graph.right_count()];
        for (i, &r) in x.targets.iter().enumerate() {
            slot[r] = Some(i);
        }
        let words = scorer.words();
        Coverage {
            graph,
            scorer,
            slot,
            covered: vec![0; words * x.targets.len()],
            words,
        }
    }

    fn gain(&self, v: usize) -> f64 {
        let mut g = 0.0;
        for &(r, e) in self.graph.neighbors(v) {
            let Some(t) = self.slot[r] else { continue };
            let bits = &self.covered[t * self.words..(t + 1) * self.words];
            for &i in &self.scorer.present[e] {
                let i = i as usize;
                if bits[i / 64] & (1 << (i % 64)) == 0 {
                    g += self.scorer.weights[i];
                }
            }
        }
        g
    }

    fn add(&mut self, v: usize) {
        for &(r, e) in self.graph.neighbors(v) {
            let Some(t) = self.slot[r] else { continue };
            let bits = &mut self.covered[t * self.words..(t + 1) * self.words];
            for &i in &self.scorer.present[e] {
                let i = i as usize;
                bits[i / 64] |= 1 << (i % 64);
            }
        }
    }
}

#[derive(PartialEq)]
struct Entry {
    gain: f64,
    node: usize,
    round: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lazy (CELF) greedy. Output-identical to [`plain_greedy`]: gains are sums
/// of nonnegative terms in a fixed order, so a recomputed gain never exceeds
/// its stale bound even in floating point.
pub fn lazy_greedy(graph: &CoverGraph, scorer: &CoverScorer, x: &SscInput) -> Result<SscSolution> {
    x.validate(graph)?;
    let mut cov = Coverage::new(graph, scorer, x);
    let mut heap: BinaryHeap<Entry> = (0..graph.left_count())
        .map(|v| Entry {
            gain: cov.gain(v),
            node: v,
            round: 0,
        })
        .filter(|e| e.gain > 0.0)
        .collect();
    let mut chosen = Vec::with_capacity(x.budget);
    while chosen.len() < x.budget {
        let round = chosen.len();
        let Some(top) = heap.pop() else { break };
        if top.round == round {
            cov.add(top.node);
            chosen.push(top.node);
        } else {
            let gain = cov.gain(top.node);
            if gain > 0.0 {
                heap.push(Entry {
                    gain,
                    node: top.node,
                    round,
                });
            }
        }
    }
    chosen.sort_unstable();
    Ok(SscSolution(chosen))
}

/// Reference greedy recomputing every marginal gain each round.
pub fn plain_greedy(graph: &CoverGraph, scorer: &CoverScorer, x: &SscInput) -> Result<SscSolution> {
    let mut chosen: Vec<usize> = greedy_chain(graph, scorer, x)?.into_iter().map(|(v, _)| v).collect();
    chosen.sort_unstable();
    Ok(SscSolution(chosen))
}

/// Greedy on a configuration sample and weights.
pub fn greedy_oracle(
    graph: &CoverGraph,
    sample: &ConfigurationSample<SscConfig>,
    weights: &WeightVector,
    x: &SscInput,
) -> Result<SscSolution> {
    lazy_greedy(graph, &CoverScorer::new(graph, sample, weights)?, x)
}

/// Plain-greedy picks in selection order with their marginal gains.
pub fn greedy_chain(graph: &CoverGraph, scorer: &CoverScorer, x: &SscInput) -> Result<Vec<(usize, f64)>> {
    x.validate(graph)?;
    let mut cov = Coverage::new(graph, scorer, x);
    let mut taken = vec![false; graph.left_count()];
    let mut out = Vec::new();
    while out.len() < x.budget {
        let mut best: Option<(f64, usize)> = None;
        for v in (0..graph.left_count()).filter(|&v| !taken[v]) {
            let g = cov.gain(v);
            if best.is_none_or(|(bg, _)| g > bg) {
                best = Some((g, v));
            }
        }
        match best {
            Some((g, v)) if g > 0.0 => {
                taken[v] = true;
                cov.add(v);
                out.push((v, g));
            }
            _ => break,
        }
    }
    Ok(out)
}
