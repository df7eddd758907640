//! One-slack cutting-plane training of the configuration weights.
//!
//! Each outer iteration runs the oracle on every training input under the
//! current weights, averages the resulting margin constraints into one
//! cutting plane and, if that plane is violated, re-solves the restricted QP.

pub mod qp;

use std::fmt::Write as _;
use std::sync::Arc;

use dashmap::DashMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UscoError};
use crate::framework::{dot, kernel_features, ConfigurationSample, Problem, ScoreModel, Sense, WeightVector};

pub use qp::{solve_restricted_qp, solve_warm, QpSolution, WorkingConstraint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingPair<I, S> {
    pub x: I,
    pub y_ref: S,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainerParams {
    pub c_reg: f64,
    pub eta: f64,
    pub margin_factor: f64,
    pub tol: f64,
    pub max_outer_iter: usize,
    pub qp_tol: f64,
    pub qp_max_iter: usize,
    /// Constraints with a zero multiplier for this many consecutive
    /// re-solves are dropped.
    pub prune_after: usize,
}

impl TrainerParams {
    /// Defaults for `m` training pairs: `c_reg = 0.01 m`.
    pub fn for_train_size(m: usize) -> Self {
        TrainerParams {
            c_reg: 0.01 * m as f64,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(UscoError::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        pos(self.c_reg, "c_reg")?;
        pos(self.eta, "eta")?;
        pos(self.margin_factor, "margin_factor")?;
        pos(self.tol, "tol")?;
        pos(self.qp_tol, "qp_tol")?;
        if self.max_outer_iter == 0 || self.qp_max_iter == 0 || self.prune_after == 0 {
            return Err(UscoError::Config("iteration limits must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for TrainerParams {
    fn default() -> Self {
        TrainerParams {
            c_reg: 1.0,
            eta: 1.0,
            margin_factor: 1.0,
            tol: 1e-4,
            max_outer_iter: 200,
            qp_tol: 1e-8,
            qp_max_iter: 100_000,
            prune_after: 50,
        }
    }
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    /// Full primal `1/2 |w|^2 + C xi` at this iteration's weights, with the
    /// slack taken over every constraint seen so far.
    pub primal: f64,
    /// Best primal so far.
    pub best_primal: f64,
    /// Restricted-QP optimum, a lower bound on the full primal.
    pub lower_bound: f64,
    pub slack: f64,
    pub working_set_size: usize,
    pub max_violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub seed_weights: WeightVector,
    /// Features enter the QP divided by this; primal values are in those
    /// units, `w' = scale * w`.
    pub feature_scale: f64,
    /// Smallest full primal seen up to each outer iteration: an upper
    /// bound on the optimum that only moves down.
    pub objective_trace: Vec<f64>,
    /// Slack of `seed_weights` over every generated constraint and the
    /// sweep at those weights.
    pub slack: f64,
    /// Every cutting plane generated, pruned or not, in unscaled units.
    pub constraints: Vec<WorkingConstraint>,
    pub working_set_size: usize,
    pub converged: bool,
    pub iterations: usize,
    pub log: Vec<IterationLog>,
}

impl TrainOutcome {
    pub fn log_csv(&self) -> String {
        let mut s = String::from("iteration,primal,best_primal,lower_bound,slack,working_set_size,max_violation\n");
        for l in &self.log {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                l.iteration, l.primal, l.best_primal, l.lower_bound, l.slack, l.working_set_size, l.max_violation
            );
        }
        s
    }
}

pub fn zero_one_loss<S: Eq>(y_ref: &S, y: &S) -> f64 {
    if y_ref == y {
        0.0
    } else {
        1.0
    }
}

/// `w . d` orientation of one pair: positive when the reference wins.
fn margin_direction(sense: Sense, margin_factor: f64, k_ref: &[f64], k_hat: &[f64]) -> Vec<f64> {
    match sense {
        Sense::Maximize => k_ref.iter().zip(k_hat).map(|(r, h)| margin_factor * r - h).collect(),
        Sense::Minimize => k_ref.iter().zip(k_hat).map(|(r, h)| h - margin_factor * r).collect(),
    }
}

/// Oracle optimizer of the score for `pair.x` and its margin violation
/// `eta * loss - w . d` against the reference solution.
pub fn loss_augmented_inference<P: Problem>(
    problem: &P,
    model: &ScoreModel<P::Config>,
    pair: &TrainingPair<P::Input, P::Solution>,
    eta: f64,
    margin_factor: f64,
) -> Result<(P::Solution, f64)> {
    let y_hat = problem.oracle(&pair.x, &model.sample, &model.weights)?;
    let k_ref = kernel_features(problem, &pair.x, &pair.y_ref, &model.sample)?;
    let k_hat = kernel_features(problem, &pair.x, &y_hat, &model.sample)?;
    let d = margin_direction(model.sense, margin_factor, &k_ref, &k_hat);
    let violation = eta * zero_one_loss(&pair.y_ref, &y_hat) - dot(model.weights.as_slice(), &d);
    Ok((y_hat, violation))
}

type FeatureCache<P> = DashMap<(<P as Problem>::Input, <P as Problem>::Solution), Arc<Vec<f64>>>;

fn cached_features<P: Problem>(
    problem: &P,
    cache: &FeatureCache<P>,
    sample: &ConfigurationSample<P::Config>,
    x: &P::Input,
    y: &P::Solution,
) -> Result<Arc<Vec<f64>>> {
    let key = (x.clone(), y.clone());
    if let Some(v) = cache.get(&key) {
        return Ok(Arc::clone(&v));
    }
    let feats = Arc::new(kernel_features(problem, x, y, sample)?);
    cache.insert(key, Arc::clone(&feats));
    Ok(feats)
}

/// Mean absolute kernel feature over the reference solutions; 1 when all
/// features vanish.
fn feature_scale<P: Problem>(
    problem: &P,
    pairs: &[TrainingPair<P::Input, P::Solution>],
    sample: &ConfigurationSample<P::Config>,
    cache: &FeatureCache<P>,
) -> Result<f64> {
    let sums: Vec<f64> = pairs
        .par_iter()
        .map(|p| Ok(cached_features(problem, cache, sample, &p.x, &p.y_ref)?.iter().map(|v| v.abs()).sum()))
        .collect::<Result<_>>()?;
    let mean = sums.iter().sum::<f64>() / (pairs.len() * sample.k()) as f64;
    Ok(if mean > 0.0 && mean.is_finite() { mean } else { 1.0 })
}

struct Sweep {
    constraint: WorkingConstraint,
    violation: f64,
}

/// Loss-augmented inference over all pairs, averaged into one constraint.
fn sweep<P: Problem>(
    problem: &P,
    pairs: &[TrainingPair<P::Input, P::Solution>],
    sample: &ConfigurationSample<P::Config>,
    weights: &[f64],
    params: &TrainerParams,
    cache: &FeatureCache<P>,
) -> Result<Sweep> {
    let k = sample.k();
    let scorer = problem.scorer(sample, &WeightVector(weights.to_vec()))?;
    let sense = problem.sense();
    let per_pair: Vec<Option<Vec<f64>>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, pair)| {
            let wrap = |e: UscoError| UscoError::Training {
                pair: i,
                source: Box::new(e),
            };
            let y_hat = problem.solve(&scorer, &pair.x).map_err(wrap)?;
            // the reference itself is not a competitor
            if y_hat == pair.y_ref {
                return Ok(None);
            }
            let k_ref = cached_features(problem, cache, sample, &pair.x, &pair.y_ref).map_err(wrap)?;
            let k_hat = cached_features(problem, cache, sample, &pair.x, &y_hat).map_err(wrap)?;
            Ok(Some(margin_direction(sense, params.margin_factor, &k_ref, &k_hat)))
        })
        .collect::<Result<_>>()?;

    let m = pairs.len() as f64;
    let mut d = vec![0.0; k];
    let mut wrong = 0usize;
    for di in per_pair.iter().flatten() {
        wrong += 1;
        for (a, b) in d.iter_mut().zip(di) {
            *a += b;
        }
    }
    d.iter_mut().for_each(|v| *v /= m);
    let constraint = WorkingConstraint {
        d,
        delta: params.eta * wrong as f64 / m,
    };
    let violation = constraint.violation(weights);
    Ok(Sweep { constraint, violation })
}

/// Fits the seed vector on `pairs` with the configurations in `sample`.
///
/// Returns the iterate with the best full primal objective, ties within
/// `c_reg * tol` going to the latest one. The full primal of the iterates
/// is not monotone, so the trace records its running minimum.
pub fn train_one_slack<P: Problem>(
    problem: &P,
    pairs: &[TrainingPair<P::Input, P::Solution>],
    sample: &ConfigurationSample<P::Config>,
    params: &TrainerParams,
) -> Result<TrainOutcome> {
    params.validate()?;
    if pairs.is_empty() {
        return Err(UscoError::Config("training set is empty".into()));
    }
    let k = sample.k();
    if k == 0 {
        return Err(UscoError::Config("configuration sample is empty".into()));
    }
    for (i, pair) in pairs.iter().enumerate() {
        problem
            .validate_input(&pair.x)
            .and_then(|_| problem.check_feasible(&pair.x, &pair.y_ref))
            .map_err(|e| UscoError::Training {
                pair: i,
                source: Box::new(e),
            })?;
    }

    let cache: FeatureCache<P> = DashMap::new();
    let scale = feature_scale(problem, pairs, sample, &cache)?;
    let mut working: Vec<WorkingConstraint> = Vec::new();
    let mut idle: Vec<usize> = Vec::new();
    let mut history: Vec<WorkingConstraint> = Vec::new();
    let mut multipliers: Vec<f64> = Vec::new();
    let mut w = vec![0.0; k];
    let mut qp_slack = 0.0;
    let mut lower_bound = 0.0;

    let mut best_primal = f64::INFINITY;
    // weights and their own sweep violation
    let mut chosen: (Vec<f64>, f64) = (w.clone(), 0.0);
    let mut trace = Vec::new();
    let mut log = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for iteration in 0..params.max_outer_iter {
        iterations = iteration + 1;
        let sw = sweep(problem, pairs, sample, &w, params, &cache)?;
        let hist_max = history.iter().map(|c| c.violation(&w)).fold(0.0f64, f64::max);
        let full_slack = hist_max.max(sw.violation);
        let primal = 0.5 * scale * scale * dot(&w, &w) + params.c_reg * full_slack;
        // ties within the violation tolerance go to the later iterate,
        // which carries more cutting planes
        if primal <= best_primal + params.c_reg * params.tol {
            chosen = (w.clone(), sw.violation);
        }
        best_primal = best_primal.min(primal);
        trace.push(best_primal);
        log.push(IterationLog {
            iteration,
            primal,
            best_primal,
            lower_bound,
            slack: qp_slack,
            working_set_size: working.len(),
            max_violation: sw.violation,
        });
        log::debug!(
            "iter {iteration}: primal {primal:.6} best {best_primal:.6} lb {lower_bound:.6} viol {:.6} ws {}",
            sw.violation,
            working.len()
        );

        if sw.violation <= qp_slack + params.tol {
            converged = true;
            break;
        }
        if iteration + 1 == params.max_outer_iter {
            break;
        }
        working.push(WorkingConstraint {
            d: sw.constraint.d.iter().map(|v| v / scale).collect(),
            delta: sw.constraint.delta,
        });
        history.push(sw.constraint);
        idle.push(0);
        let sol = solve_warm(&working, k, params.c_reg, params.qp_tol, params.qp_max_iter, Some(&multipliers))?;
        w = sol.weights.iter().map(|v| v / scale).collect();
        qp_slack = sol.slack;
        lower_bound = sol.dual;
        multipliers = sol.multipliers;

        // drop constraints that stayed inactive for too long
        let mut keep = Vec::with_capacity(working.len());
        for (j, &l) in multipliers.iter().enumerate() {
            idle[j] = if l > 0.0 { 0 } else { idle[j] + 1 };
            keep.push(idle[j] < params.prune_after);
        }
        if keep.iter().any(|k| !k) {
            let mut j = 0;
            working.retain(|_| {
                j += 1;
                keep[j - 1]
            });
            let mut j = 0;
            idle.retain(|_| {
                j += 1;
                keep[j - 1]
            });
            let mut j = 0;
            multipliers.retain(|_| {
                j += 1;
                keep[j - 1]
            });
        }
    }

    // planes cut after the choice can be violated more at these weights
    let (weights, sweep_violation) = chosen;
    let slack = history
        .iter()
        .map(|c| c.violation(&weights))
        .fold(sweep_violation.max(0.0), f64::max);
    Ok(TrainOutcome {
        feature_scale: scale,
        seed_weights: WeightVector(weights),
        objective_trace: trace,
        slack,
        working_set_size: working.len(),
        constraints: history,
        converged,
        iterations,
        log,
    })
}

/// Fraction of pairs whose prediction differs from the reference.
pub fn training_error<P: Problem>(
    problem: &P,
    model: &ScoreModel<P::Config>,
    pairs: &[TrainingPair<P::Input, P::Solution>],
) -> Result<f64> {
    let inputs: Vec<P::Input> = pairs.iter().map(|p| p.x.clone()).collect();
    let preds = crate::framework::predict_many(problem, model, &inputs)?;
    let wrong = preds.iter().zip(pairs).filter(|(y, p)| **y != p.y_ref).count();
    Ok(wrong as f64 / pairs.len() as f64)
}
