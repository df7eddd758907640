mod common;

use usco::ssc::{CoverGraph, SscConfig, SscInput, SscProblem, SscSolution};
use usco::ssp::{Graph, SspConfig, SspInput, SspPath, SspProblem};
use usco::{
    compute_beta, in_relaxed_margin, kernel_features, margin, perturb_weights, required_k, score, RequiredKParams,
    ScoreModel, Sense, UscoError, WeightVector,
};

use common::close;

#[test]
fn compute_beta_worked_examples() {
    for (got, closed_form, printed) in common::beta_examples() {
        assert!(close(got, closed_form, 1e-12), "{got} vs {closed_form}");
        // the printed decimals carry rounding in the sixth digit
        assert!(close(got, printed, 2e-6), "{got} vs {printed}");
    }
}

#[test]
fn compute_beta_errors() {
    assert!(matches!(compute_beta(&WeightVector(vec![1.0, 0.0]), 10, 1.0), Err(UscoError::Domain(_))));
    // 2 m K / |w|^2 = 2 * 1 * 1 / 4 <= 1
    assert!(matches!(compute_beta(&WeightVector(vec![2.0]), 1, 1.0), Err(UscoError::Domain(_))));
}

#[test]
fn compute_beta_matches_rederivation() {
    common::beta_rederivations(11).unwrap();
}

fn kp(c: f64, delta1: f64, y_size: f64) -> RequiredKParams {
    RequiredKParams {
        a: 1.0,
        b: 1.0,
        c_ratio: c,
        eps: 0.1,
        delta1,
        delta2: 0.1,
        y_size,
    }
}

#[test]
fn required_k_worked_examples() {
    assert_eq!(required_k(&kp(1.0, 0.5, 1024.0)).unwrap(), 152493);
    assert_eq!(required_k(&kp(1.0, 1.0, 1.0)).unwrap(), 10000);
    assert_eq!(required_k(&kp(2.0, 0.5, 1024.0)).unwrap(), 609970);
}

#[test]
fn required_k_rejects_bad_params() {
    assert!(required_k(&kp(0.5, 0.5, 4.0)).is_err());
    assert!(required_k(&kp(1.0, 0.0, 4.0)).is_err());
    assert!(required_k(&RequiredKParams { b: 0.5, ..kp(1.0, 0.5, 4.0) }).is_err());
    assert!(required_k(&RequiredKParams { delta2: 1.0, ..kp(1.0, 0.5, 4.0) }).is_err());
}

#[test]
fn required_k_matches_rederivation() {
    common::k_rederivations(12).unwrap();
}

#[test]
fn score_examples() {
    assert_eq!(score(&WeightVector(vec![1.0]), &[5.0]).unwrap(), 5.0);
    assert_eq!(score(&WeightVector(vec![0.5, 2.0]), &[5.0, 7.0]).unwrap(), 16.5);
    assert_eq!(score(&WeightVector(vec![0.0, 0.0]), &[5.0, 7.0]).unwrap(), 0.0);
    assert!(matches!(
        score(&WeightVector(vec![1.0]), &[1.0, 2.0]),
        Err(UscoError::Dimension { .. })
    ));
}

fn abc() -> SspProblem {
    SspProblem::new(Graph::new(3, vec![(0, 1), (1, 2)], true).unwrap())
}

#[test]
fn kernel_feature_examples() {
    let p = abc();
    let x = SspInput::new(0, 2);
    let y = SspPath(vec![0, 1, 2]);
    let one = common::sample_of(vec![SspConfig { weights: vec![2.0, 3.0] }]);
    assert_eq!(kernel_features(&p, &x, &y, &one).unwrap(), vec![5.0]);
    let two = common::sample_of(vec![
        SspConfig { weights: vec![2.0, 3.0] },
        SspConfig { weights: vec![4.0, 3.0] },
    ]);
    assert_eq!(kernel_features(&p, &x, &y, &two).unwrap(), vec![5.0, 7.0]);
    assert!(matches!(
        kernel_features(&p, &x, &SspPath(vec![0, 2]), &one),
        Err(UscoError::Infeasible(_))
    ));

    let g = CoverGraph::new(1, 2, vec![(0, 0), (0, 1)]).unwrap();
    let sp = SscProblem::new(g);
    let sample = common::sample_of(vec![SscConfig::full(2)]);
    let f = kernel_features(&sp, &SscInput::new(vec![0, 1], 1), &SscSolution(vec![0]), &sample).unwrap();
    assert_eq!(f, vec![2.0]);
}

/// Two routes from 0 to 1: direct (score `a`) and through 2 (score `b`).
fn two_routes(a: f64, b: f64, alpha: f64, sense: Sense) -> (SspProblem, ScoreModel<SspConfig>) {
    let p = SspProblem::new(Graph::new(3, vec![(0, 1), (0, 2), (2, 1)], true).unwrap());
    let sample = common::sample_of(vec![SspConfig { weights: vec![a, b, 0.0] }]);
    let model = ScoreModel::new(sample, WeightVector(vec![1.0]), alpha, sense).unwrap();
    (p, model)
}

#[test]
fn margin_examples() {
    let x = SspInput::new(0, 1);
    let direct = SspPath(vec![0, 1]);
    let detour = SspPath(vec![0, 2, 1]);
    let (p, m) = two_routes(10.0, 7.0, 1.0, Sense::Maximize);
    assert_eq!(margin(&p, &m, &x, &direct, &direct).unwrap(), 0.0);
    assert_eq!(margin(&p, &m, &x, &direct, &detour).unwrap(), 3.0);
    let alpha = 1.0 - 1.0 / std::f64::consts::E;
    let (p, m) = two_routes(10.0, 5.0, alpha, Sense::Maximize);
    assert!(close(margin(&p, &m, &x, &direct, &detour).unwrap(), 1.321206, 1e-6));
}

#[test]
fn relaxed_margin_examples() {
    let x = SspInput::new(0, 1);
    let y_ref = SspPath(vec![0, 1]);
    let y = SspPath(vec![0, 2, 1]);
    let (p, m) = two_routes(10.0, 5.0, 1.0, Sense::Maximize);
    assert!(in_relaxed_margin(&p, &m, &x, &y_ref, &y, 0.5).unwrap());
    let (p, m) = two_routes(10.0, 4.9, 1.0, Sense::Maximize);
    assert!(!in_relaxed_margin(&p, &m, &x, &y_ref, &y, 0.5).unwrap());
    let (p, m) = two_routes(10.0, 11.0, 1.0, Sense::Minimize);
    assert!(in_relaxed_margin(&p, &m, &x, &y_ref, &y, 1.0).unwrap());
    let (p, m) = two_routes(10.0, 9.0, 1.0, Sense::Minimize);
    assert!(!in_relaxed_margin(&p, &m, &x, &y_ref, &y, 1.0).unwrap());
    assert!(in_relaxed_margin(&p, &m, &x, &y_ref, &y, 0.0).is_err());
}

#[test]
fn perturb_weights_shape_and_determinism() {
    let w = WeightVector(vec![0.3; 7]);
    let a = perturb_weights(&w, 2.5, 99).unwrap();
    assert_eq!(a.len(), 7);
    assert_eq!(a, perturb_weights(&w, 2.5, 99).unwrap());
    assert_ne!(a, perturb_weights(&w, 2.5, 100).unwrap());
}

#[test]
fn perturb_weights_mean_matches_law() {
    let n = 100_000;
    let w = WeightVector(vec![1.0; 3]);
    let mut cols = vec![Vec::with_capacity(n); 3];
    for seed in 0..n as u64 {
        for (c, v) in cols.iter_mut().zip(perturb_weights(&w, 2.0, seed).unwrap().0) {
            c.push(v);
        }
    }
    for c in &cols {
        let mean = c.iter().sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() <= 3.0 / (n as f64).sqrt(), "mean {mean}");
    }
}
