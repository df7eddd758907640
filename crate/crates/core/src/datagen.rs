//! Instance laws, labeled input-solution pairs and configuration pools.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UscoError};
use crate::framework::{ConfigSource, Configuration, DistSpec, Provenance};
use crate::rng::{self, StreamRng};
use crate::sbm::{hungarian_oracle, MatchGraph, SbmInput, SbmInstance, SbmMatching};
use crate::ssc::{greedy_expected, CoverGraph, EdgeProbLaw, SscInput, SscInstance, SscSolution};
use crate::ssp::{dijkstra_oracle, Graph, SspInput, SspInstance, SspPath, WeibullEdgeLaw, WeibullParams, WEIBULL_PARAM_MAX};
use crate::trainer::TrainingPair;

/// Rejection attempts per requested pair before giving up.
pub const RETRY_FACTOR: usize = 1000;

/// `clamp(floor(scale * U^(1/a)), min, max)` with `U` uniform on `(0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawSpec {
    pub exponent: f64,
    pub scale: f64,
    pub min_value: usize,
    pub max_value: usize,
}

impl PowerLawSpec {
    pub fn with_max(max_value: usize) -> Self {
        PowerLawSpec {
            exponent: 2.5,
            scale: 200.0,
            min_value: 2,
            max_value,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.exponent > 0.0) || !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(UscoError::Domain("power law needs a > 0 and scale > 0".into()));
        }
        if self.min_value > self.max_value {
            return Err(UscoError::Domain(format!(
                "power law min {} exceeds max {}",
                self.min_value, self.max_value
            )));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut StreamRng) -> usize {
        let u = 1.0 - rng.random::<f64>();
        let raw = (self.scale * u.powf(1.0 / self.exponent)).floor() as usize;
        raw.clamp(self.min_value, self.max_value)
    }
}

pub fn sample_powerlaw_size(spec: &PowerLawSpec, rng_seed: u64) -> Result<usize> {
    spec.validate()?;
    Ok(spec.sample(&mut rng::rng_from_seed(rng_seed)))
}

pub const DEFAULT_POOL_SIZE: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolSpec {
    pub dist_spec: DistSpec,
    pub pool_size: usize,
    pub master_seed: u64,
}

impl PoolSpec {
    pub fn new(dist_spec: DistSpec, master_seed: u64) -> Self {
        PoolSpec {
            dist_spec,
            pool_size: DEFAULT_POOL_SIZE,
            master_seed,
        }
    }
}

/// Per-edge Weibull shape and scale drawn uniformly from `1..=10`.
pub fn gen_ssp_instance(graph: &Graph, rng_seed: u64) -> WeibullEdgeLaw {
    let mut rng = rng::stream(rng_seed, "ssp-law", 0);
    WeibullEdgeLaw {
        params: (0..graph.edge_count())
            .map(|_| WeibullParams {
                shape: rng.random_range(1..=WEIBULL_PARAM_MAX),
                scale: rng.random_range(1..=WEIBULL_PARAM_MAX),
            })
            .collect(),
    }
}

/// `p_e = a / (a + b)` with `a, b` uniform on `1..=10`.
pub fn gen_ssc_instance(graph: &CoverGraph, rng_seed: u64) -> EdgeProbLaw {
    let mut rng = rng::stream(rng_seed, "ssc-law", 0);
    EdgeProbLaw {
        probs: (0..graph.edge_count())
            .map(|_| {
                let a = rng.random_range(1..=10u32) as f64;
                let b = rng.random_range(1..=10u32) as f64;
                a / (a + b)
            })
            .collect(),
    }
}

pub fn gen_sbm_instance(n: usize, rng_seed: u64) -> Result<MatchGraph> {
    MatchGraph::random(n, rng_seed)
}

fn retry_cap(n_pairs: usize) -> usize {
    RETRY_FACTOR * n_pairs.max(1)
}

/// Distinct reachable node pairs labeled by Dijkstra on mean edge weights.
pub fn gen_ssp_pairs(inst: &SspInstance, n_pairs: usize, rng_seed: u64) -> Result<Vec<TrainingPair<SspInput, SspPath>>> {
    let g = inst.graph();
    let n = g.node_count();
    if n < 2 {
        return Err(UscoError::Domain("need at least two nodes".into()));
    }
    let means = inst.law.mean_weights();
    let mut rng = rng::stream(rng_seed, "ssp-pairs", 0);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n_pairs);
    let mut attempts = 0;
    while out.len() < n_pairs {
        attempts += 1;
        if attempts > retry_cap(n_pairs) {
            return Err(UscoError::NoSolution(format!(
                "only {} distinct reachable pairs after {} draws",
                out.len(),
                attempts - 1
            )));
        }
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v || seen.contains(&(u, v)) {
            continue;
        }
        let x = SspInput::new(u, v);
        match dijkstra_oracle(g, &means, &x) {
            Ok(y) => {
                seen.insert((u, v));
                out.push(TrainingPair { x, y_ref: y });
            }
            Err(UscoError::NoSolution(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Distinct target sets with budget `max(1, floor(|R*| / 10))`, labeled by
/// greedy on the exact expected coverage.
pub fn gen_ssc_pairs(
    inst: &SscInstance,
    n_pairs: usize,
    spec: &PowerLawSpec,
    rng_seed: u64,
) -> Result<Vec<TrainingPair<SscInput, SscSolution>>> {
    spec.validate()?;
    let g = inst.graph();
    let spec = PowerLawSpec {
        max_value: spec.max_value.min(g.right_count()),
        min_value: spec.min_value.min(g.right_count()).max(1),
        ..*spec
    };
    let mut rng = rng::stream(rng_seed, "ssc-pairs", 0);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n_pairs);
    let mut attempts = 0;
    while out.len() < n_pairs {
        attempts += 1;
        if attempts > retry_cap(n_pairs) {
            return Err(UscoError::NoSolution(format!("only {} distinct inputs found", out.len())));
        }
        let size = spec.sample(&mut rng);
        let targets = index::sample(&mut rng, g.right_count(), size).into_vec();
        let budget = (size / 10).max(1).min(g.left_count());
        let x = SscInput::new(targets, budget);
        if !seen.insert(x.clone()) {
            continue;
        }
        let y = greedy_expected(g, &inst.law, &x)?;
        out.push(TrainingPair { x, y_ref: y });
    }
    Ok(out)
}

/// Random equal-size subsets labeled by Hungarian on the mean costs.
/// Inputs may repeat: at small `n` most draws are the full node sets.
pub fn gen_sbm_pairs(
    inst: &SbmInstance,
    n_pairs: usize,
    spec: &PowerLawSpec,
    rng_seed: u64,
) -> Result<Vec<TrainingPair<SbmInput, SbmMatching>>> {
    spec.validate()?;
    let n = inst.graph.n;
    let spec = PowerLawSpec {
        max_value: spec.max_value.min(n),
        min_value: spec.min_value.min(n).max(1),
        ..*spec
    };
    let mut rng = rng::stream(rng_seed, "sbm-pairs", 0);
    (0..n_pairs)
        .map(|_| {
            let size = spec.sample(&mut rng);
            let left = index::sample(&mut rng, n, size).into_vec();
            let right = index::sample(&mut rng, n, size).into_vec();
            let x = SbmInput::new(left, right);
            let y = hungarian_oracle(&inst.graph.mu, n, &x)?;
            Ok(TrainingPair { x, y_ref: y })
        })
        .collect()
}

/// Pool element `i` drawn with sub-seed `derive_seed(master, "config", i)`.
pub fn gen_config_pool<S>(source: &S, spec: &PoolSpec) -> Result<Vec<Configuration<S::Config>>>
where
    S: ConfigSource + Sync,
    S::Config: Send,
{
    if spec.pool_size == 0 {
        return Err(UscoError::Config("pool size must be >= 1".into()));
    }
    let (dist, master_seed) = (&spec.dist_spec, spec.master_seed);
    let name = dist.name();
    (0..spec.pool_size)
        .into_par_iter()
        .map(|i| {
            let sub_seed = S::sub_seed(master_seed, i);
            Ok(Configuration {
                config_id: i,
                payload: source.sample_config(dist, sub_seed)?,
                provenance: Provenance {
                    dist: name.clone(),
                    sub_seed,
                },
            })
        })
        .collect()
}
