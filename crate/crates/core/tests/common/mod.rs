//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use usco::ssc::{CoverGraph, SscConfig, SscInput};
use usco::ssp::Graph;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random simple graph on `n` nodes; each ordered (or unordered) pair is an
/// edge with probability `p`.
pub fn random_graph(n: usize, p: f64, directed: bool, rng: &mut impl Rng) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u == v || (!directed && v < u) {
                continue;
            }
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges, directed).expect("generated graph is valid")
}

/// Every simple path from `s` to `t` as (node sequence, edge ids).
pub fn simple_paths(g: &Graph, s: usize, t: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    fn go(
        g: &Graph,
        t: usize,
        nodes: &mut Vec<usize>,
        edges: &mut Vec<usize>,
        seen: &mut Vec<bool>,
        out: &mut Vec<(Vec<usize>, Vec<usize>)>,
    ) {
        let a = *nodes.last().unwrap();
        if a == t {
            out.push((nodes.clone(), edges.clone()));
            return;
        }
        for &(b, e) in g.out_neighbors(a) {
            if seen[b] {
                continue;
            }
            seen[b] = true;
            nodes.push(b);
            edges.push(e);
            go(g, t, nodes, edges, seen, out);
            nodes.pop();
            edges.pop();
            seen[b] = false;
        }
    }
    let mut seen = vec![false; g.node_count()];
    seen[s] = true;
    let mut out = Vec::new();
    go(g, t, &mut vec![s], &mut Vec::new(), &mut seen, &mut out);
    out
}

/// Best simple path by (weight, edge count, node sequence).
pub fn brute_shortest(g: &Graph, w: &[f64], s: usize, t: usize) -> Option<(f64, Vec<usize>)> {
    simple_paths(g, s, t)
        .into_iter()
        .map(|(nodes, edges)| (edges.iter().map(|&e| w[e]).sum::<f64>(), nodes))
        .min_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(a.1.len().cmp(&b.1.len()))
                .then(a.1.cmp(&b.1))
        })
}

/// Every permutation of `0..n`, in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                go(cur, used, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Minimum assignment cost of a row-major `n x n` matrix.
pub fn brute_assignment(costs: &[f64], n: usize) -> f64 {
    permutations(n)
        .iter()
        .map(|p| p.iter().enumerate().map(|(i, &j)| costs[i * n + j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// All subsets of `0..n` of size exactly `k`.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            go(v + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Targets covered by `chosen` under `config`, computed by set union.
pub fn union_coverage(g: &CoverGraph, config: &SscConfig, x: &SscInput, chosen: &[usize]) -> usize {
    let mut covered = std::collections::BTreeSet::new();
    for (e, &(l, r)) in g.edges().iter().enumerate() {
        if config.contains(e) && chosen.contains(&l) && x.targets.binary_search(&r).is_ok() {
            covered.insert(r);
        }
    }
    covered.len()
}

/// Weighted coverage `sum_i w_i |covered_i|`.
pub fn weighted_coverage(g: &CoverGraph, configs: &[SscConfig], w: &[f64], x: &SscInput, chosen: &[usize]) -> f64 {
    configs
        .iter()
        .zip(w)
        .map(|(c, wi)| wi * union_coverage(g, c, x, chosen) as f64)
        .sum()
}

/// Best weighted coverage over subsets of size `min(k, |L|)`.
pub fn brute_max_coverage(g: &CoverGraph, configs: &[SscConfig], w: &[f64], x: &SscInput) -> f64 {
    k_subsets(g.left_count(), x.budget.min(g.left_count()))
        .iter()
        .map(|s| weighted_coverage(g, configs, w, x, s))
        .fold(0.0, f64::max)
}

/// Random cover graph with `left` x `right` nodes and edge density `p`.
pub fn random_cover(left: usize, right: usize, p: f64, rng: &mut impl Rng) -> CoverGraph {
    let mut edges = Vec::new();
    for l in 0..left {
        for r in 0..right {
            if rng.random::<f64>() < p {
                edges.push((l, r));
            }
        }
    }
    CoverGraph::new(left, right, edges).expect("generated cover graph is valid")
}

/// Random subset of the edges, each kept with probability `p`.
pub fn random_config(edge_count: usize, p: f64, rng: &mut impl Rng) -> SscConfig {
    let mut c = SscConfig::empty(edge_count);
    for e in 0..edge_count {
        if rng.random::<f64>() < p {
            c.insert(e);
        }
    }
    c
}

/// Nonempty random target set over `0..right`.
pub fn random_targets(right: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..right).collect();
    ids.shuffle(rng);
    let take = rng.random_range(1..=right);
    ids.truncate(take);
    ids
}

/// Sample mean and standard error.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One random Dijkstra case: graph on at most 8 nodes, integer weights so
/// ties are frequent and sums exact. Checks the returned path against the
/// enumeration, tie rule included.
pub fn dijkstra_case(seed: u64) -> Result<(), String> {
    use usco::ssp::{dijkstra_oracle, SspInput};
    use usco::UscoError;

    let mut r = rng(seed);
    let n = r.random_range(2..=8);
    let directed = r.random::<bool>();
    let g = random_graph(n, r.random_range(0.2..0.8), directed, &mut r);
    let w: Vec<f64> = (0..g.edge_count()).map(|_| r.random_range(0..=6) as f64).collect();
    let s = r.random_range(0..n);
    let t = (s + r.random_range(1..n)) % n;
    let got = dijkstra_oracle(&g, &w, &SspInput::new(s, t));
    match (brute_shortest(&g, &w, s, t), got) {
        (None, Err(UscoError::NoSolution(_))) => Ok(()),
        (Some((len, nodes)), Ok(path)) => {
            let got_len: f64 = path.edge_ids(&g).map_err(|e| e.to_string())?.iter().map(|&e| w[e]).sum();
            if got_len != len || path.0 != nodes {
                Err(format!("seed {seed}: got {:?} ({got_len}), expected {nodes:?} ({len})", path.0))
            } else {
                Ok(())
            }
        }
        (b, g) => Err(format!("seed {seed}: brute {b:?} vs oracle {g:?}")),
    }
}

/// One random 6x6 assignment case: optimal cost must equal the minimum
/// over all 720 permutations.
pub fn hungarian_case(seed: u64) -> Result<(), String> {
    use usco::sbm::{assignment_cost, hungarian};

    let mut r = rng(seed);
    let n = 6;
    // small integer costs make many optima tie
    let integral = r.random::<bool>();
    let costs: Vec<f64> = (0..n * n)
        .map(|_| if integral { r.random_range(0..5) as f64 } else { r.random_range(0.0..100.0) })
        .collect();
    let assign = hungarian(&costs, n).map_err(|e| e.to_string())?;
    let mut seen = assign.clone();
    seen.sort_unstable();
    if seen != (0..n).collect::<Vec<_>>() {
        return Err(format!("seed {seed}: {assign:?} is not a permutation"));
    }
    let got = assignment_cost(&costs, n, &assign);
    let best = brute_assignment(&costs, n);
    if got != best && (got - best).abs() > 1e-9 * best.abs().max(1.0) {
        return Err(format!("seed {seed}: cost {got} vs brute force {best}"));
    }
    if integral {
        // lexicographically smallest optimal permutation
        let lex = permutations(n)
            .into_iter()
            .find(|p| assignment_cost(&costs, n, p) == best)
            .expect("some permutation is optimal");
        if lex != assign {
            return Err(format!("seed {seed}: {assign:?} is not the smallest optimum {lex:?}"));
        }
    }
    Ok(())
}

/// One random coverage case with |L| <= 10, k <= 3 and up to three
/// weighted configurations.
pub fn greedy_case(seed: u64) -> Result<(), String> {
    use usco::ssc::{greedy_oracle, SscConfig};
    use usco::{Configuration, ConfigurationSample, DistSpec, Provenance, WeightVector};

    let mut r = rng(seed);
    let left = r.random_range(1..=10);
    let right = r.random_range(1..=12);
    let g = random_cover(left, right, r.random_range(0.1..0.6), &mut r);
    let k_cfg = r.random_range(1..=3);
    let configs: Vec<SscConfig> = (0..k_cfg).map(|_| random_config(g.edge_count(), 0.7, &mut r)).collect();
    let w: Vec<f64> = (0..k_cfg).map(|_| r.random_range(0.1..2.0)).collect();
    let budget = r.random_range(1..=3.min(left));
    let x = SscInput::new(random_targets(right, &mut r), budget);
    let sample = ConfigurationSample {
        configs: configs
            .iter()
            .enumerate()
            .map(|(i, c)| Configuration {
                config_id: i,
                payload: c.clone(),
                provenance: Provenance {
                    dist: "fixed".into(),
                    sub_seed: 0,
                },
            })
            .collect(),
        dist_spec: DistSpec::PhiTrue,
        master_seed: 0,
    };
    let y = greedy_oracle(&g, &sample, &WeightVector(w.clone()), &x).map_err(|e| e.to_string())?;
    if y.0.len() > budget {
        return Err(format!("seed {seed}: {} nodes over budget {budget}", y.0.len()));
    }
    let got = weighted_coverage(&g, &configs, &w, &x, &y.0);
    let opt = brute_max_coverage(&g, &configs, &w, &x);
    let bound = (1.0 - 1.0 / std::f64::consts::E) * opt;
    if got + 1e-12 * opt < bound {
        return Err(format!("seed {seed}: greedy {got} < (1-1/e) * {opt}"));
    }
    Ok(())
}

/// Wraps `payloads` as a sample with fixed provenance.
pub fn sample_of<C>(payloads: Vec<C>) -> usco::ConfigurationSample<C> {
    usco::ConfigurationSample {
        configs: payloads
            .into_iter()
            .enumerate()
            .map(|(i, payload)| usco::Configuration {
                config_id: i,
                payload,
                provenance: usco::Provenance {
                    dist: "fixed".into(),
                    sub_seed: i as u64,
                },
            })
            .collect(),
        dist_spec: usco::DistSpec::PhiTrue,
        master_seed: 0,
    }
}

/// `4 / (min|w| alpha^2) * sqrt(2 ln(2 m K / |w|^2))`, evaluated through
/// logarithms of the factors instead of direct products.
pub fn beta_reference(w: &[f64], m: usize, alpha: f64) -> f64 {
    let min = w.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    let norm_sq: f64 = w.iter().map(|v| v * v).sum();
    let log_arg = 2f64.ln() + (m as f64).ln() + (w.len() as f64).ln() - norm_sq.ln();
    let log_beta = 4f64.ln() - min.ln() - 2.0 * alpha.ln() + 0.5 * (2.0 * log_arg).ln();
    log_beta.exp()
}

/// Real-valued K bound before the ceiling, from the log-space product.
pub fn k_reference(p: &usco::RequiredKParams) -> f64 {
    let tail = f64::max(0.5, p.y_size.ln() - p.delta1.ln());
    (2f64.ln() + 2.0 * (p.c_ratio.ln() + p.b.ln() - p.eps.ln() - p.delta2.ln() - p.a.ln()) + tail.ln()).exp()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

/// Worked beta examples: (computed, closed form, printed decimals).
pub fn beta_examples() -> Vec<(f64, f64, f64)> {
    use usco::{compute_beta, WeightVector};
    let ones = WeightVector(vec![1.0; 4]);
    vec![
        (compute_beta(&ones, 100, 1.0).unwrap(), 4.0 * (2.0 * 200f64.ln()).sqrt(), 13.020995),
        (compute_beta(&ones, 100, 0.5).unwrap(), 16.0 * (2.0 * 200f64.ln()).sqrt(), 52.083981),
        (
            compute_beta(&WeightVector(vec![2.0, 2.0]), 50, 1.0).unwrap(),
            2.0 * (2.0 * 25f64.ln()).sqrt(),
            5.074539,
        ),
    ]
}

/// 50 random beta parameter sets against [`beta_reference`].
pub fn beta_rederivations(seed: u64) -> Result<(), String> {
    use usco::{compute_beta, UscoError, WeightVector};
    let mut r = rng(seed);
    let mut checked = 0;
    while checked < 50 {
        let k = r.random_range(1..20);
        let w: Vec<f64> = (0..k).map(|_| r.random_range(0.05..3.0)).collect();
        let m = r.random_range(1..500);
        let alpha = r.random_range(0.1..=1.0);
        match compute_beta(&WeightVector(w.clone()), m, alpha) {
            Ok(b) => {
                let want = beta_reference(&w, m, alpha);
                if !close(b, want, 1e-9) {
                    return Err(format!("beta {b} vs {want}"));
                }
                checked += 1;
            }
            Err(UscoError::Domain(_)) => {
                let norm_sq: f64 = w.iter().map(|v| v * v).sum();
                if 2.0 * m as f64 * k as f64 / norm_sq > 1.0 {
                    return Err(format!("domain error on a valid input {w:?}, {m}"));
                }
            }
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(())
}

/// 50 random K-bound parameter sets against [`k_reference`].
pub fn k_rederivations(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    for _ in 0..50 {
        let a = r.random_range(0.1..5.0);
        let p = usco::RequiredKParams {
            a,
            b: a * r.random_range(1.0..4.0),
            c_ratio: r.random_range(1.0..3.0),
            eps: r.random_range(0.05..1.0),
            delta1: r.random_range(0.01..1.0),
            delta2: r.random_range(0.05..0.95),
            y_size: r.random_range(1.0..1e6f64).floor(),
        };
        let got = usco::required_k(&p).map_err(|e| e.to_string())? as f64;
        let want = k_reference(&p);
        // the ceiling sits within one unit above the real-valued bound
        let bracketed = got >= want * (1.0 - 1e-9) && got < want * (1.0 + 1e-9) + 1.0;
        let rounded = close(got, want.ceil(), 1e-9) || close(got, want.round(), 1e-9);
        if !(bracketed && rounded) {
            return Err(format!("K {got} vs bound {want}"));
        }
    }
    Ok(())
}

pub const MC_SAMPLES: u64 = 100_000;

pub fn within_3se(exact: f64, draws: &[f64]) -> Result<(), String> {
    let (mean, se) = mean_se(draws);
    if (mean - exact).abs() <= 3.0 * se.max(1e-12) {
        Ok(())
    } else {
        Err(format!("exact {exact}, Monte Carlo {mean} +- {se}"))
    }
}

/// Expected length of a random path against sampled configurations.
pub fn path_length_mc_case(case: u64) -> Result<(), String> {
    use usco::ssp::{dijkstra_oracle, expected_path_length, sample_ssp_config, SspInput};
    let mut r = rng(1000 + case);
    let g = loop {
        let g = random_graph(6, 0.5, true, &mut r);
        if g.edge_count() > 0 {
            break g;
        }
    };
    let law = usco::datagen::gen_ssp_instance(&g, case);
    // any reachable pair; route on the mean weights
    let (u, v) = g.edges()[r.random_range(0..g.edge_count())];
    let path = dijkstra_oracle(&g, &law.mean_weights(), &SspInput::new(u, v)).map_err(|e| e.to_string())?;
    let edges = path.edge_ids(&g).map_err(|e| e.to_string())?;
    let draws: Vec<f64> = (0..MC_SAMPLES)
        .map(|s| {
            let c = sample_ssp_config(&g, &usco::DistSpec::PhiTrue, Some(&law), case * MC_SAMPLES + s).unwrap();
            edges.iter().map(|&e| c.weights[e]).sum()
        })
        .collect();
    let exact = expected_path_length(&g, &path, &law).map_err(|e| e.to_string())?;
    within_3se(exact, &draws).map_err(|e| format!("case {case}: {e}"))
}

/// Expected coverage of a random k-subset against sampled configurations.
pub fn coverage_mc_case(case: u64) -> Result<(), String> {
    use usco::ssc::{coverage_value, expected_coverage, sample_ssc_config, SscSolution};
    let mut r = rng(2000 + case);
    let g = random_cover(8, 12, 0.3, &mut r);
    let law = usco::datagen::gen_ssc_instance(&g, case);
    let budget = r.random_range(1..=4);
    let x = SscInput::new(random_targets(12, &mut r), budget);
    let subsets = k_subsets(8, budget);
    let y = SscSolution(subsets[r.random_range(0..subsets.len())].clone());
    let draws: Vec<f64> = (0..MC_SAMPLES)
        .map(|s| {
            let c = sample_ssc_config(&g, &usco::DistSpec::PhiTrue, Some(&law), case * MC_SAMPLES + s).unwrap();
            coverage_value(&g, &c, &x, &y) as f64
        })
        .collect();
    let exact = expected_coverage(&g, &x, &y, &law).map_err(|e| e.to_string())?;
    within_3se(exact, &draws).map_err(|e| format!("case {case}: {e}"))
}

/// Expected cost of a random partial matching against sampled costs.
pub fn matching_mc_case(case: u64) -> Result<(), String> {
    use usco::sbm::{expected_matching_cost, sample_sbm_config, MatchGraph, SbmMatching};
    let mut r = rng(3000 + case);
    let n = r.random_range(2..=6);
    let g = MatchGraph::random(n, case).map_err(|e| e.to_string())?;
    let perm = &permutations(n)[r.random_range(0..(1..=n).product::<usize>())];
    let size = r.random_range(1..=n);
    let y = SbmMatching::new((0..size).map(|i| (i, perm[i])).collect());
    let draws: Vec<f64> = (0..MC_SAMPLES)
        .map(|s| {
            let c = sample_sbm_config(&g, &usco::DistSpec::PhiTrue, case * MC_SAMPLES + s).unwrap();
            y.0.iter().map(|&(l, rr)| c.costs[l * n + rr]).sum()
        })
        .collect();
    let exact = expected_matching_cost(&y, &g).map_err(|e| e.to_string())?;
    within_3se(exact, &draws).map_err(|e| format!("case {case}: {e}"))
}
