//! Experiment orchestration: performance ratios, repeated randomized runs
//! over a (distribution, K) grid, and CSV result tables.

pub mod io;
pub mod presets;

use std::fmt::{Debug, Write as _};
use std::time::Instant;

use rand::seq::index;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::datagen::{gen_sbm_pairs, gen_ssc_pairs, gen_ssp_pairs, PowerLawSpec};
use crate::error::{Result, UscoError};
use crate::framework::{
    perturbed_prediction_weights, predict_many, ConfigSource, Configuration, ConfigurationSample, DistSpec, Family,
    Problem, ScoreModel, Sense, WeightVector,
};
use crate::rng;
use crate::sbm::{expected_matching_cost, sbm_rand_baseline, SbmInstance, SbmProblem};
use crate::ssc::{expected_coverage, ssc_rand_baseline, SscInstance, SscProblem};
use crate::ssp::{expected_path_length, ssp_base_baseline, SspInstance, SspProblem};
use crate::trainer::{train_one_slack, TrainOutcome, TrainerParams, TrainingPair};

pub type PairOf<P> = TrainingPair<<P as Problem>::Input, <P as Problem>::Solution>;

/// A problem instance together with its ground-truth law: everything needed
/// to draw configurations, label pairs and score predictions.
pub trait Benchmark:
    ConfigSource<Config = <Self::P as Problem>::Config> + Clone + Debug + PartialEq + Serialize + DeserializeOwned + Sync
{
    type P: Problem<
        Input: Serialize + DeserializeOwned,
        Solution: Serialize + DeserializeOwned,
        Config: Serialize + DeserializeOwned + PartialEq,
    >;
    const FAMILY: Family;
    /// Name of the family's trivial baseline.
    const BASELINE: &'static str;

    fn problem(&self) -> &Self::P;

    fn gen_pairs(&self, n: usize, sizes: &PowerLawSpec, seed: u64) -> Result<Vec<PairOf<Self::P>>>;

    /// `F(x, y, phi_true)`.
    fn true_objective(
        &self,
        x: &<Self::P as Problem>::Input,
        y: &<Self::P as Problem>::Solution,
    ) -> Result<f64>;

    fn baseline(&self, x: &<Self::P as Problem>::Input, seed: u64) -> Result<<Self::P as Problem>::Solution>;
}

impl Benchmark for SspInstance {
    type P = SspProblem;
    const FAMILY: Family = Family::Ssp;
    const BASELINE: &'static str = "base";

    fn problem(&self) -> &SspProblem {
        &self.problem
    }

    fn gen_pairs(&self, n: usize, _sizes: &PowerLawSpec, seed: u64) -> Result<Vec<PairOf<SspProblem>>> {
        gen_ssp_pairs(self, n, seed)
    }

    fn true_objective(&self, x: &crate::ssp::SspInput, y: &crate::ssp::SspPath) -> Result<f64> {
        self.problem.check_feasible(x, y)?;
        expected_path_length(self.graph(), y, &self.law)
    }

    fn baseline(&self, x: &crate::ssp::SspInput, seed: u64) -> Result<crate::ssp::SspPath> {
        ssp_base_baseline(self.graph(), x, seed)
    }
}

impl Benchmark for SscInstance {
    type P = SscProblem;
    const FAMILY: Family = Family::Ssc;
    const BASELINE: &'static str = "rand";

    fn problem(&self) -> &SscProblem {
        &self.problem
    }

    fn gen_pairs(&self, n: usize, sizes: &PowerLawSpec, seed: u64) -> Result<Vec<PairOf<SscProblem>>> {
        gen_ssc_pairs(self, n, sizes, seed)
    }

    fn true_objective(&self, x: &crate::ssc::SscInput, y: &crate::ssc::SscSolution) -> Result<f64> {
        self.problem.check_feasible(x, y)?;
        expected_coverage(self.graph(), x, y, &self.law)
    }

    fn baseline(&self, x: &crate::ssc::SscInput, seed: u64) -> Result<crate::ssc::SscSolution> {
        ssc_rand_baseline(self.graph(), x, seed)
    }
}

impl Benchmark for SbmInstance {
    type P = SbmProblem;
    const FAMILY: Family = Family::Sbm;
    const BASELINE: &'static str = "rand";

    fn problem(&self) -> &SbmProblem {
        SbmInstance::problem(self)
    }

    fn gen_pairs(&self, n: usize, sizes: &PowerLawSpec, seed: u64) -> Result<Vec<PairOf<SbmProblem>>> {
        gen_sbm_pairs(self, n, sizes, seed)
    }

    fn true_objective(&self, x: &crate::sbm::SbmInput, y: &crate::sbm::SbmMatching) -> Result<f64> {
        SbmInstance::problem(self).check_feasible(x, y)?;
        expected_matching_cost(y, &self.graph)
    }

    fn baseline(&self, x: &crate::sbm::SbmInput, seed: u64) -> Result<crate::sbm::SbmMatching> {
        sbm_rand_baseline(x, seed)
    }
}

/// `F(ref) / F(pred)` when maximizing, `F(pred) / F(ref)` when minimizing;
/// `None` on a zero denominator. Lower is better.
pub fn performance_ratio(sense: Sense, f_pred: f64, f_ref: f64) -> Option<f64> {
    let (num, den) = match sense {
        Sense::Maximize => (f_ref, f_pred),
        Sense::Minimize => (f_pred, f_ref),
    };
    (den != 0.0).then(|| num / den)
}

/// Configurations a run draws its `C_K` from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ConfigPool<C> {
    /// Element `i` is regenerated from `derive_seed(master_seed, "config", i)`.
    Seeded { dist: DistSpec, master_seed: u64, size: usize },
    Inline { dist: DistSpec, master_seed: u64, configs: Vec<Configuration<C>> },
}

impl<C: Clone> ConfigPool<C> {
    pub fn dist(&self) -> DistSpec {
        match self {
            ConfigPool::Seeded { dist, .. } | ConfigPool::Inline { dist, .. } => *dist,
        }
    }

    pub fn master_seed(&self) -> u64 {
        match self {
            ConfigPool::Seeded { master_seed, .. } | ConfigPool::Inline { master_seed, .. } => *master_seed,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            ConfigPool::Seeded { size, .. } => *size,
            ConfigPool::Inline { configs, .. } => configs.len(),
        }
    }

    pub fn draw<S: ConfigSource<Config = C>>(&self, source: &S, indices: &[usize]) -> Result<ConfigurationSample<C>> {
        if let Some(&i) = indices.iter().find(|&&i| i >= self.size()) {
            return Err(UscoError::Config(format!("pool index {i} out of range for size {}", self.size())));
        }
        match self {
            ConfigPool::Seeded { dist, master_seed, .. } => {
                ConfigurationSample::from_indices(source, *dist, *master_seed, indices)
            }
            ConfigPool::Inline { dist, master_seed, configs } => {
                if indices.is_empty() {
                    return Err(UscoError::Domain("a configuration sample needs K >= 1".into()));
                }
                Ok(ConfigurationSample {
                    configs: indices.iter().map(|&i| configs[i].clone()).collect(),
                    dist_spec: *dist,
                    master_seed: *master_seed,
                })
            }
        }
    }
}

/// Pool indices of run `run`'s `C_K`, uniform without replacement.
pub fn draw_indices(master_seed: u64, dist: &DistSpec, k: usize, run: usize, pool_size: usize) -> Vec<usize> {
    let mut draw_rng = rng::stream(master_seed, &format!("draw:{}:{k}", dist.name()), run as u64);
    index::sample(&mut draw_rng, pool_size, k).into_vec()
}

/// Master seed of the seeded pool for `dist` under the experiment seed.
pub fn pool_seed(master_seed: u64, dist: &DistSpec) -> u64 {
    rng::derive_seed(master_seed, &format!("pool:{}", dist.name()), 0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: String,
    pub dists: Vec<DistSpec>,
    pub ks: Vec<usize>,
    pub train_size: usize,
    pub test_size: usize,
    pub runs: usize,
    pub params: TrainerParams,
    pub master_seed: u64,
    pub pool_size: usize,
    pub sizes: PowerLawSpec,
    /// Predict with perturbed weights instead of the seed vector.
    pub perturb: bool,
    pub baseline: bool,
    /// Report wall time; off keeps the CSV byte-deterministic.
    pub wall_time: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(UscoError::Config("runs must be >= 1".into()));
        }
        if self.train_size == 0 || self.test_size == 0 {
            return Err(UscoError::Config("train and test sizes must be >= 1".into()));
        }
        if let Some(&k) = self.ks.iter().find(|&&k| k == 0 || k > self.pool_size) {
            return Err(UscoError::Config(format!("K = {k} outside 1..={}", self.pool_size)));
        }
        self.params.validate()?;
        self.sizes.validate()
    }
}

/// Trainer contract as observed on one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractCheck {
    pub nonnegative: bool,
    /// `max_j (delta_j - w . d_j) - xi` over every generated constraint.
    pub max_excess: f64,
    /// Largest increase between consecutive objective-trace entries.
    pub max_trace_increase: f64,
}

impl ContractCheck {
    pub fn of(outcome: &TrainOutcome) -> Self {
        let w = outcome.seed_weights.as_slice();
        let max_excess = outcome
            .constraints
            .iter()
            .map(|c| c.violation(w) - outcome.slack)
            .fold(f64::NEG_INFINITY, f64::max);
        let max_trace_increase = outcome
            .objective_trace
            .windows(2)
            .map(|p| p[1] - p[0])
            .fold(f64::NEG_INFINITY, f64::max);
        ContractCheck {
            nonnegative: outcome.seed_weights.is_nonnegative(),
            max_excess,
            max_trace_increase,
        }
    }

    pub fn holds(&self, tol: f64, qp_tol: f64) -> bool {
        self.nonnegative && self.max_excess <= tol && self.max_trace_increase <= qp_tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dist: String,
    pub k: usize,
    pub run: usize,
    pub mean_ratio: Option<f64>,
    pub excluded: usize,
    pub error: Option<String>,
    pub contract: Option<ContractCheck>,
    pub converged: bool,
    pub iterations: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub dist: String,
    /// 0 for baseline rows.
    pub k: usize,
    /// Successful runs.
    pub runs: usize,
    pub mean_ratio: f64,
    pub std_ratio: f64,
    pub excluded: usize,
    pub wall_time_s: Option<f64>,
    /// Runs that failed; a row with failures is incomplete.
    pub failed: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub records: Vec<RunRecord>,
}

pub const CSV_HEADER: &str = "dataset,dist,K,runs,mean_ratio,std_ratio,excluded,wall_time_s";

impl ResultTable {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{CSV_HEADER}\n");
        for r in &self.rows {
            let wall = r.wall_time_s.map_or_else(|| "NA".to_string(), |t| format!("{t:.3}"));
            let _ = writeln!(
                s,
                "{},{},{},{},{:.6},{:.6},{},{}",
                r.dataset, r.dist, r.k, r.runs, r.mean_ratio, r.std_ratio, r.excluded, wall
            );
        }
        s
    }

    pub fn row(&self, dist: &str, k: usize) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.dist == dist && r.k == k)
    }
}

/// Mean and sample standard deviation (`n - 1` denominator; 0 for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean ratio over `preds` against the references, skipping zero
/// denominators.
fn ratio_over<B: Benchmark>(
    bench: &B,
    test: &[PairOf<B::P>],
    preds: &[<B::P as Problem>::Solution],
) -> Result<(Option<f64>, usize)> {
    let sense = bench.problem().sense();
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut excluded = 0usize;
    for (pair, y) in test.iter().zip(preds) {
        let f_pred = bench.true_objective(&pair.x, y)?;
        let f_ref = bench.true_objective(&pair.x, &pair.y_ref)?;
        match performance_ratio(sense, f_pred, f_ref) {
            Some(r) => {
                sum += r;
                used += 1;
            }
            None => excluded += 1,
        }
    }
    Ok(((used > 0).then(|| sum / used as f64), excluded))
}

/// Train on `train` with the configurations in `sample`, then score the
/// test predictions.
pub fn train_and_evaluate<B: Benchmark>(
    bench: &B,
    train: &[PairOf<B::P>],
    test: &[PairOf<B::P>],
    sample: ConfigurationSample<<B::P as Problem>::Config>,
    params: &TrainerParams,
    perturb_seed: Option<u64>,
) -> Result<(TrainOutcome, Option<f64>, usize)> {
    let problem = bench.problem();
    let outcome = train_one_slack(problem, train, &sample, params)?;
    let weights: WeightVector = match perturb_seed {
        Some(seed) => perturbed_prediction_weights(&outcome.seed_weights, train.len(), problem.alpha(), seed)?,
        None => outcome.seed_weights.clone(),
    };
    let model = ScoreModel::for_problem(problem, sample, weights)?;
    let inputs: Vec<_> = test.iter().map(|p| p.x.clone()).collect();
    let preds = predict_many(problem, &model, &inputs)?;
    let (ratio, excluded) = ratio_over(bench, test, &preds)?;
    Ok((outcome, ratio, excluded))
}

struct RunData<B: Benchmark> {
    train: Vec<PairOf<B::P>>,
    test: Vec<PairOf<B::P>>,
}

/// Runs every (distribution, K) cell `runs` times with seeded pools.
pub fn run_experiment<B: Benchmark>(bench: &B, cfg: &ExperimentConfig) -> Result<ResultTable> {
    let pools: Vec<ConfigPool<<B::P as Problem>::Config>> = cfg
        .dists
        .iter()
        .map(|d| ConfigPool::Seeded {
            dist: *d,
            master_seed: pool_seed(cfg.master_seed, d),
            size: cfg.pool_size,
        })
        .collect();
    run_experiment_with_pools(bench, cfg, &pools)
}

/// Like [`run_experiment`] but with explicit pools, one per entry of
/// `cfg.dists` (matched by position).
pub fn run_experiment_with_pools<B: Benchmark>(
    bench: &B,
    cfg: &ExperimentConfig,
    pools: &[ConfigPool<<B::P as Problem>::Config>],
) -> Result<ResultTable> {
    cfg.validate()?;
    if pools.len() != cfg.dists.len() {
        return Err(UscoError::Config(format!(
            "{} pools for {} distributions",
            pools.len(),
            cfg.dists.len()
        )));
    }
    for pool in pools {
        if let Some(&k) = cfg.ks.iter().find(|&&k| k > pool.size()) {
            return Err(UscoError::Config(format!(
                "K = {k} exceeds the {} pool size {}",
                pool.dist(),
                pool.size()
            )));
        }
    }
    let master = cfg.master_seed;
    let n_pairs = cfg.train_size + cfg.test_size;
    let runs: Vec<RunData<B>> = (0..cfg.runs)
        .into_par_iter()
        .map(|r| {
            let mut pairs = bench.gen_pairs(n_pairs, &cfg.sizes, rng::derive_seed(master, "pairs", r as u64))?;
            let test = pairs.split_off(cfg.train_size);
            Ok(RunData { train: pairs, test })
        })
        .collect::<Result<_>>()?;

    let mut table = ResultTable::default();

    if cfg.baseline {
        let started = Instant::now();
        let per_run: Vec<RunRecord> = runs
            .par_iter()
            .enumerate()
            .map(|(r, data)| {
                let t0 = Instant::now();
                let preds: Result<Vec<_>> = data
                    .test
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        let seed = rng::derive_seed(master, &format!("baseline:{r}"), i as u64);
                        bench.baseline(&p.x, seed)
                    })
                    .collect();
                let (mean_ratio, excluded, error) = match preds.and_then(|p| ratio_over(bench, &data.test, &p)) {
                    Ok((m, e)) => (m, e, None),
                    Err(e) => (None, 0, Some(e.to_string())),
                };
                RunRecord {
                    dist: B::BASELINE.to_string(),
                    k: 0,
                    run: r,
                    mean_ratio,
                    excluded,
                    error,
                    contract: None,
                    converged: true,
                    iterations: 0,
                    seconds: t0.elapsed().as_secs_f64(),
                }
            })
            .collect();
        table
            .rows
            .push(summarize(cfg, B::BASELINE, 0, &per_run, started.elapsed().as_secs_f64()));
        table.records.extend(per_run);
    }

    let cells: Vec<(usize, usize)> = (0..pools.len())
        .flat_map(|d| (0..cfg.ks.len()).map(move |k| (d, k)))
        .collect();
    for (d, ki) in cells {
        let pool = &pools[d];
        let k = cfg.ks[ki];
        let dist_name = pool.dist().name();
        let started = Instant::now();
        let per_run: Vec<RunRecord> = runs
            .par_iter()
            .enumerate()
            .map(|(r, data)| {
                let t0 = Instant::now();
                let indices = draw_indices(master, &pool.dist(), k, r, pool.size());
                let perturb_seed = cfg
                    .perturb
                    .then(|| rng::derive_seed(master, &format!("perturb:{dist_name}:{k}"), r as u64));
                let result = pool
                    .draw(bench, &indices)
                    .and_then(|s| train_and_evaluate(bench, &data.train, &data.test, s, &cfg.params, perturb_seed));
                let seconds = t0.elapsed().as_secs_f64();
                match result {
                    Ok((outcome, mean_ratio, excluded)) => RunRecord {
                        dist: dist_name.clone(),
                        k,
                        run: r,
                        mean_ratio,
                        excluded,
                        error: None,
                        contract: Some(ContractCheck::of(&outcome)),
                        converged: outcome.converged,
                        iterations: outcome.iterations,
                        seconds,
                    },
                    Err(e) => RunRecord {
                        dist: dist_name.clone(),
                        k,
                        run: r,
                        mean_ratio: None,
                        excluded: 0,
                        error: Some(e.to_string()),
                        contract: None,
                        converged: false,
                        iterations: 0,
                        seconds,
                    },
                }
            })
            .collect();
        for rec in &per_run {
            if let Some(e) = &rec.error {
                log::warn!("{} K={} run {} failed: {e}", rec.dist, rec.k, rec.run);
            }
        }
        table
            .rows
            .push(summarize(cfg, &dist_name, k, &per_run, started.elapsed().as_secs_f64()));
        table.records.extend(per_run);
    }
    Ok(table)
}

fn summarize(cfg: &ExperimentConfig, dist: &str, k: usize, records: &[RunRecord], seconds: f64) -> ResultRow {
    let ratios: Vec<f64> = records.iter().filter_map(|r| r.mean_ratio).collect();
    let (mean, std) = mean_std(&ratios);
    ResultRow {
        dataset: cfg.dataset.clone(),
        dist: dist.to_string(),
        k,
        runs: ratios.len(),
        mean_ratio: mean,
        std_ratio: std,
        excluded: records.iter().map(|r| r.excluded).sum(),
        wall_time_s: cfg.wall_time.then_some(seconds),
        failed: records.iter().filter(|r| r.mean_ratio.is_none()).count(),
    }
}
