//! Problem-agnostic machinery: configuration kernels, affine scores,
//! margins, the perturbation scale, the configuration-count bound and
//! oracle-backed prediction.

use std::fmt::{self, Debug};
use std::hash::Hash;
use std::str::FromStr;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result, UscoError};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ssp,
    Ssc,
    Sbm,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Ssp => "ssp",
            Family::Ssc => "ssc",
            Family::Sbm => "sbm",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = UscoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ssp" => Ok(Family::Ssp),
            "ssc" => Ok(Family::Ssc),
            "sbm" => Ok(Family::Sbm),
            other => Err(UscoError::Config(format!("unknown problem family `{other}`"))),
        }
    }
}

/// Distribution over configurations used to draw kernel configurations.
///
/// Which variants are meaningful depends on the problem family; samplers
/// reject the others.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistSpec {
    /// Per-configuration min-max rescaled unit exponentials (shortest path).
    PhiExp,
    /// Folded standard Gaussians (shortest path).
    PhiNorm,
    /// The ground-truth law of the instance.
    PhiTrue,
    /// Family-specific uninformed distribution (coverage, matching).
    PhiUni,
    /// Uniform on a relative interval of half-width `q` around the mean (matching).
    PhiQ { q: f64 },
}

impl DistSpec {
    pub fn name(&self) -> String {
        match self {
            DistSpec::PhiExp => "phi_exp".into(),
            DistSpec::PhiNorm => "phi_norm".into(),
            DistSpec::PhiTrue => "phi_true".into(),
            DistSpec::PhiUni => "phi_uni".into(),
            DistSpec::PhiQ { q } => format!("phi_{q}"),
        }
    }
}

impl fmt::Display for DistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for DistSpec {
    type Err = UscoError;

    fn from_str(s: &str) -> Result<Self> {
        let body = s.strip_prefix("phi_").unwrap_or(s);
        match body {
            "exp" => Ok(DistSpec::PhiExp),
            "norm" => Ok(DistSpec::PhiNorm),
            "true" => Ok(DistSpec::PhiTrue),
            "uni" => Ok(DistSpec::PhiUni),
            other => match other.parse::<f64>() {
                Ok(q) if q > 0.0 && q.is_finite() => Ok(DistSpec::PhiQ { q }),
                _ => Err(UscoError::Config(format!("unknown distribution `{s}`"))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub dist: String,
    pub sub_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration<C> {
    pub config_id: usize,
    pub payload: C,
    pub provenance: Provenance,
}

/// Something that can draw configurations of type `C` from a [`DistSpec`].
pub trait ConfigSource {
    type Config;

    fn sample_config(&self, dist: &DistSpec, seed: u64) -> Result<Self::Config>;

    /// Sub-seed of pool element `index` under `master`.
    fn sub_seed(master: u64, index: usize) -> u64 {
        rng::derive_seed(master, "config", index as u64)
    }
}

/// The ordered configurations `c_1..c_K` a score model is built on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationSample<C> {
    pub configs: Vec<Configuration<C>>,
    pub dist_spec: DistSpec,
    pub master_seed: u64,
}

impl<C> ConfigurationSample<C> {
    /// Draws configurations `0..k` of the stream `(dist, master_seed)`.
    pub fn generate<S>(source: &S, dist: DistSpec, master_seed: u64, k: usize) -> Result<Self>
    where
        S: ConfigSource<Config = C>,
    {
        Self::from_indices(source, dist, master_seed, &(0..k).collect::<Vec<_>>())
    }

    /// Draws the configurations with the given pool indices.
    pub fn from_indices<S>(
        source: &S,
        dist: DistSpec,
        master_seed: u64,
        indices: &[usize],
    ) -> Result<Self>
    where
        S: ConfigSource<Config = C>,
    {
        if indices.is_empty() {
            return Err(UscoError::Domain("a configuration sample needs K >= 1".into()));
        }
        let name = dist.name();
        let configs = indices
            .iter()
            .map(|&i| {
                let sub_seed = S::sub_seed(master_seed, i);
                Ok(Configuration {
                    config_id: i,
                    payload: source.sample_config(&dist, sub_seed)?,
                    provenance: Provenance {
                        dist: name.clone(),
                        sub_seed,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ConfigurationSample {
            configs,
            dist_spec: dist,
            master_seed,
        })
    }

    pub fn k(&self) -> usize {
        self.configs.len()
    }

    pub fn payloads(&self) -> impl Iterator<Item = &C> {
        self.configs.iter().map(|c| &c.payload)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn zeros(k: usize) -> Self {
        WeightVector(vec![0.0; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|w| w * w).sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&w| w >= 0.0 && w.is_finite())
    }
}

impl From<Vec<f64>> for WeightVector {
    fn from(v: Vec<f64>) -> Self {
        WeightVector(v)
    }
}

/// An optimization problem whose objective is known only through
/// per-configuration evaluations and an oracle for positive affine
/// combinations of them.
pub trait Problem: Sync {
    type Input: Clone + Eq + Hash + Debug + Send + Sync;
    /// Solutions compare by their canonical encoding.
    type Solution: Clone + Eq + Ord + Hash + Debug + Send + Sync;
    type Config: Clone + Debug + Send + Sync;
    /// Oracle state for a fixed weighted sample, reused across inputs.
    type Scorer: Send + Sync;

    fn family(&self) -> Family;
    fn sense(&self) -> Sense;
    /// Approximation guarantee of [`Problem::solve`]; 1 for exact oracles.
    fn alpha(&self) -> f64;

    fn validate_input(&self, x: &Self::Input) -> Result<()>;
    fn check_feasible(&self, x: &Self::Input, y: &Self::Solution) -> Result<()>;
    fn validate_config(&self, c: &Self::Config) -> Result<()>;

    /// `f(x, y, c)` for a feasible pair.
    fn objective(&self, x: &Self::Input, y: &Self::Solution, c: &Self::Config) -> f64;

    fn scorer(
        &self,
        sample: &ConfigurationSample<Self::Config>,
        weights: &WeightVector,
    ) -> Result<Self::Scorer>;

    fn solve(&self, scorer: &Self::Scorer, x: &Self::Input) -> Result<Self::Solution>;

    fn oracle(
        &self,
        x: &Self::Input,
        sample: &ConfigurationSample<Self::Config>,
        weights: &WeightVector,
    ) -> Result<Self::Solution> {
        self.solve(&self.scorer(sample, weights)?, x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreModel<C> {
    pub sample: ConfigurationSample<C>,
    pub weights: WeightVector,
    pub alpha: f64,
    pub sense: Sense,
}

impl<C> ScoreModel<C> {
    pub fn new(
        sample: ConfigurationSample<C>,
        weights: WeightVector,
        alpha: f64,
        sense: Sense,
    ) -> Result<Self> {
        check_len(sample.k(), weights.len())?;
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(UscoError::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        Ok(ScoreModel {
            sample,
            weights,
            alpha,
            sense,
        })
    }

    pub fn for_problem<P>(problem: &P, sample: ConfigurationSample<C>, weights: WeightVector) -> Result<Self>
    where
        P: Problem<Config = C>,
    {
        Self::new(sample, weights, problem.alpha(), problem.sense())
    }
}

/// `(f(x, y, c_1), ..., f(x, y, c_K))`.
pub fn kernel_features<P: Problem>(
    problem: &P,
    x: &P::Input,
    y: &P::Solution,
    sample: &ConfigurationSample<P::Config>,
) -> Result<Vec<f64>> {
    problem.check_feasible(x, y)?;
    Ok(sample.payloads().map(|c| problem.objective(x, y, c)).collect())
}

pub fn score(weights: &WeightVector, features: &[f64]) -> Result<f64> {
    check_len(weights.len(), features.len())?;
    Ok(dot(weights.as_slice(), features))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `F̂(x, y)` under the model's weights and configurations.
pub fn model_score<P: Problem>(
    problem: &P,
    model: &ScoreModel<P::Config>,
    x: &P::Input,
    y: &P::Solution,
) -> Result<f64> {
    score(&model.weights, &kernel_features(problem, x, y, &model.sample)?)
}

/// Multiplicative margin `alpha * F̂(x, y1) - F̂(x, y2)`.
pub fn margin<P: Problem>(
    problem: &P,
    model: &ScoreModel<P::Config>,
    x: &P::Input,
    y1: &P::Solution,
    y2: &P::Solution,
) -> Result<f64> {
    let s1 = model_score(problem, model, x, y1)?;
    let s2 = model_score(problem, model, x, y2)?;
    Ok(model.alpha * s1 - s2)
}

/// Membership test for the relaxed margin set measured against `y_ref`.
pub fn in_relaxed_margin<P: Problem>(
    problem: &P,
    model: &ScoreModel<P::Config>,
    x: &P::Input,
    y_ref: &P::Solution,
    y: &P::Solution,
    margin_factor: f64,
) -> Result<bool> {
    if !(margin_factor > 0.0) {
        return Err(UscoError::Domain(format!(
            "margin factor must be positive, got {margin_factor}"
        )));
    }
    let s_ref = model_score(problem, model, x, y_ref)?;
    let s = model_score(problem, model, x, y)?;
    Ok(relaxed_margin_holds(model.sense, margin_factor, s_ref, s))
}

pub(crate) fn relaxed_margin_holds(sense: Sense, margin_factor: f64, s_ref: f64, s: f64) -> bool {
    match sense {
        Sense::Maximize => margin_factor * s_ref - s <= 0.0,
        // score terms swap sides and the comparison flips
        Sense::Minimize => s - margin_factor * s_ref >= 0.0,
    }
}

/// Scale of the Gaussian mean used when perturbing a seed vector:
/// `4 / (min_p |w_p| * alpha^2) * sqrt(2 ln(2 m K / |w|^2))`.
pub fn compute_beta(seed_weights: &WeightVector, m: usize, alpha: f64) -> Result<f64> {
    let w = seed_weights.as_slice();
    if w.is_empty() {
        return Err(UscoError::Domain("empty seed vector".into()));
    }
    if m == 0 {
        return Err(UscoError::Domain("training size m must be >= 1".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(UscoError::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let min_abs = w.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if !(min_abs > 0.0) || !min_abs.is_finite() {
        return Err(UscoError::Domain("seed vector has a zero or non-finite entry".into()));
    }
    let k = w.len() as f64;
    let log_arg = 2.0 * m as f64 * k / seed_weights.norm_sq();
    if !(log_arg > 1.0) {
        return Err(UscoError::Domain(format!(
            "log argument 2mK/|w|^2 = {log_arg} must exceed 1"
        )));
    }
    Ok(4.0 / (min_abs * alpha * alpha) * (2.0 * log_arg.ln()).sqrt())
}

/// Inputs of the lower bound on the number of configurations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RequiredKParams {
    /// Lower bound of the objective.
    pub a: f64,
    /// Upper bound of the objective.
    pub b: f64,
    /// `sup phi_true / phi_em`.
    pub c_ratio: f64,
    pub eps: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// Size of the output space.
    pub y_size: f64,
}

impl RequiredKParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(UscoError::Domain(format!("required_k: {what}")));
        if !(self.a > 0.0) {
            return bad("A must be > 0");
        }
        if !(self.b >= self.a) || !self.b.is_finite() {
            return bad("B must be finite and >= A");
        }
        if !(self.c_ratio >= 1.0) || !self.c_ratio.is_finite() {
            return bad("C must be finite and >= 1");
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return bad("eps must be > 0");
        }
        if !(self.delta1 > 0.0 && self.delta1 <= 1.0) {
            return bad("delta1 must lie in (0, 1]");
        }
        if !(self.delta2 > 0.0 && self.delta2 < 1.0) {
            return bad("delta2 must lie in (0, 1)");
        }
        if !(self.y_size >= 1.0) || !self.y_size.is_finite() {
            return bad("|Y| must be >= 1");
        }
        Ok(())
    }
}

/// Smallest K for which the sampled configurations are guaranteed to
/// contain a good affine combination:
/// `ceil(2 C^2 B^2 / (eps^2 delta2^2 A^2) * max(1/2, ln|Y| + ln(1/delta1)))`.
pub fn required_k(params: &RequiredKParams) -> Result<u64> {
    params.validate()?;
    let p = params;
    let lead = 2.0 * p.c_ratio.powi(2) * p.b.powi(2)
        / (p.eps.powi(2) * p.delta2.powi(2) * p.a.powi(2));
    let tail = f64::max(0.5, p.y_size.ln() + (1.0 / p.delta1).ln());
    let value = lead * tail;
    if !value.is_finite() || value > u64::MAX as f64 {
        return Err(UscoError::Domain(format!("required K overflows: {value}")));
    }
    // snap values within rounding noise of an integer
    let nearest = value.round();
    if (value - nearest).abs() <= 1e-9 * value.max(1.0) {
        Ok(nearest as u64)
    } else {
        Ok(value.ceil() as u64)
    }
}

/// Draws `w̄ ~ N(beta * w̃, I)`.
pub fn perturb_weights(seed_weights: &WeightVector, beta: f64, rng_seed: u64) -> Result<WeightVector> {
    if !beta.is_finite() {
        return Err(UscoError::Domain(format!("beta must be finite, got {beta}")));
    }
    let mut rng = rng::rng_from_seed(rng_seed);
    let out = seed_weights
        .as_slice()
        .iter()
        .map(|&w| {
            let normal = Normal::new(beta * w, 1.0)
                .map_err(|e| UscoError::Domain(format!("perturbation mean: {e}")))?;
            Ok(normal.sample(&mut rng))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightVector(out))
}

/// Oracle optimizer of `F̂(x, .)` under `model.sense`.
pub fn predict<P: Problem>(problem: &P, model: &ScoreModel<P::Config>, x: &P::Input) -> Result<P::Solution> {
    check_len(model.sample.k(), model.weights.len())?;
    if !model.weights.is_nonnegative() {
        return Err(UscoError::Domain("prediction needs nonnegative finite weights".into()));
    }
    problem.validate_input(x)?;
    problem.oracle(x, &model.sample, &model.weights)
}

/// Batch prediction sharing one oracle state across inputs.
pub fn predict_many<P: Problem>(
    problem: &P,
    model: &ScoreModel<P::Config>,
    inputs: &[P::Input],
) -> Result<Vec<P::Solution>> {
    use rayon::prelude::*;

    check_len(model.sample.k(), model.weights.len())?;
    if !model.weights.is_nonnegative() {
        return Err(UscoError::Domain("prediction needs nonnegative finite weights".into()));
    }
    let scorer = problem.scorer(&model.sample, &model.weights)?;
    inputs
        .par_iter()
        .map(|x| {
            problem.validate_input(x)?;
            problem.solve(&scorer, x)
        })
        .collect()
}

/// Perturbed prediction weights: Gaussian noise around `beta * w̃` on the
/// support of `w̃`, with `beta` computed over that support. Entries outside
/// the support stay zero and negative draws are clipped to zero so the
/// oracle sees a positive affine combination.
pub fn perturbed_prediction_weights(
    seed_weights: &WeightVector,
    m: usize,
    alpha: f64,
    rng_seed: u64,
) -> Result<WeightVector> {
    let support: Vec<usize> = seed_weights
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w != 0.0)
        .map(|(i, _)| i)
        .collect();
    if support.is_empty() {
        return Err(UscoError::Domain("seed vector is identically zero".into()));
    }
    let reduced = WeightVector(support.iter().map(|&i| seed_weights.0[i]).collect());
    let beta = compute_beta(&reduced, m, alpha)?;
    let drawn = perturb_weights(&reduced, beta, rng_seed)?;
    let mut out = vec![0.0; seed_weights.len()];
    for (&i, &w) in support.iter().zip(drawn.as_slice()) {
        out[i] = w.max(0.0);
    }
    Ok(WeightVector(out))
}
