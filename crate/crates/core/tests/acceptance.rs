//! Acceptance suite: one line per criterion, nonzero exit on any failure.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use usco::harness::presets::{preset, run_desk};
use usco::harness::{ExperimentConfig, ResultTable};
use usco::{DistSpec, Family, RequiredKParams};

type Outcome = Result<String, String>;

fn all(cases: impl IntoIterator<Item = u64>, check: fn(u64) -> Result<(), String>) -> Result<usize, String> {
    let mut n = 0;
    for c in cases {
        check(c)?;
        n += 1;
    }
    Ok(n)
}

fn oracle_exactness() -> Outcome {
    let t = Instant::now();
    let d = all(0..200, common::dijkstra_case)?;
    let h = all(0..100, common::hungarian_case)?;
    let g = all(0..100, common::greedy_case)?;
    let secs = t.elapsed().as_secs_f64();
    let msg = format!("dijkstra {d}/200, hungarian {h}/100, greedy {g}/100 in {secs:.2}s");
    if t.elapsed() < Duration::from_secs(60) {
        Ok(msg)
    } else {
        Err(format!("{msg}, over one minute"))
    }
}

fn formula_checks() -> Outcome {
    common::beta_rederivations(101)?;
    common::k_rederivations(102)?;
    for (got, closed_form, printed) in common::beta_examples() {
        if !common::close(got, closed_form, 1e-12) || !common::close(got, printed, 2e-6) {
            return Err(format!("beta {got}, closed form {closed_form}, printed {printed}"));
        }
    }
    let kp = |c_ratio, delta1, y_size| RequiredKParams {
        a: 1.0,
        b: 1.0,
        c_ratio,
        eps: 0.1,
        delta1,
        delta2: 0.1,
        y_size,
    };
    let ks = [
        usco::required_k(&kp(1.0, 0.5, 1024.0)).map_err(|e| e.to_string())?,
        usco::required_k(&kp(1.0, 1.0, 1.0)).map_err(|e| e.to_string())?,
        usco::required_k(&kp(2.0, 0.5, 1024.0)).map_err(|e| e.to_string())?,
    ];
    if ks != [152493, 10000, 609970] {
        return Err(format!("required_k examples {ks:?}"));
    }
    Ok("50 + 50 re-derivations within 1e-9, worked examples reproduced".into())
}

fn evaluators() -> Outcome {
    let p = all(0..20, common::path_length_mc_case)?;
    let c = all(0..20, common::coverage_mc_case)?;
    let m = all(0..20, common::matching_mc_case)?;
    Ok(format!("path {p}/20, coverage {c}/20, matching {m}/20 within 3 SE at 1e5 samples"))
}

fn mean_of(t: &ResultTable, dist: &str, k: usize) -> Result<f64, String> {
    let row = t.row(dist, k).ok_or(format!("no row {dist} K={k}"))?;
    if row.failed > 0 {
        return Err(format!("{dist} K={k}: {} failed runs", row.failed));
    }
    Ok(row.mean_ratio)
}

struct Runs {
    tables: Vec<(ExperimentConfig, ResultTable)>,
}

impl Runs {
    fn run(&mut self, family: Family, dists: Vec<DistSpec>, ks: Vec<usize>) -> Result<(ResultTable, f64), String> {
        let mut cfg = preset(family);
        cfg.dists = dists;
        cfg.ks = ks;
        let t = Instant::now();
        let table = run_desk(family, &cfg).map_err(|e| e.to_string())?;
        let secs = t.elapsed().as_secs_f64();
        self.tables.push((cfg, table.clone()));
        Ok((table, secs))
    }
}

fn recovery(runs: &mut Runs) -> Outcome {
    let (t, secs) = runs.run(Family::Ssp, vec![DistSpec::PhiTrue], vec![160])?;
    let r = mean_of(&t, "phi_true", 160)?;
    let msg = format!("ssp phi_true K=160 mean ratio {r:.4} in {secs:.1}s");
    if r <= 1.10 && secs < 600.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn monotone_in_k(runs: &mut Runs) -> Outcome {
    let (t, _) = runs.run(Family::Ssp, vec![DistSpec::PhiExp], vec![16, 1600])?;
    let lo = mean_of(&t, "phi_exp", 16)?;
    let hi = mean_of(&t, "phi_exp", 1600)?;
    let msg = format!("ssp phi_exp K=16 {lo:.4}, K=1600 {hi:.4}");
    if hi < lo {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn coverage_near_optimal(runs: &mut Runs) -> Outcome {
    let (t, _) = runs.run(Family::Ssc, vec![DistSpec::PhiTrue], vec![320])?;
    let r = mean_of(&t, "phi_true", 320)?;
    let rand = mean_of(&t, "rand", 0)?;
    let msg = format!("ssc phi_true K=320 {r:.4}, rand {rand:.4}");
    if r <= 1.05 && rand >= 2.0 * r {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn prior_knowledge(runs: &mut Runs) -> Outcome {
    let (t, _) = runs.run(Family::Sbm, vec![DistSpec::PhiUni, DistSpec::PhiQ { q: 0.3 }], vec![160])?;
    let uni = mean_of(&t, "phi_uni", 160)?;
    let tight = mean_of(&t, "phi_0.3", 160)?;
    let rand = mean_of(&t, "rand", 0)?;
    let msg = format!("sbm phi_0.3 K=160 {tight:.4}, phi_uni K=160 {uni:.4}, rand {rand:.4}");
    if tight <= 1.10 && tight < uni && rand > uni && rand > tight {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn trainer_contract(runs: &Runs) -> Outcome {
    let mut checked = 0;
    for (cfg, table) in &runs.tables {
        for rec in table.records.iter().filter(|r| r.k > 0) {
            let c = rec
                .contract
                .as_ref()
                .ok_or(format!("{} {} K={} run {}: no outcome", cfg.dataset, rec.dist, rec.k, rec.run))?;
            if !c.holds(cfg.params.tol, cfg.params.qp_tol) {
                return Err(format!("{} {} K={} run {}: {c:?}", cfg.dataset, rec.dist, rec.k, rec.run));
            }
            checked += 1;
        }
    }
    if checked == 0 {
        return Err("no training runs to check".into());
    }
    Ok(format!("{checked} training runs hold"))
}

fn determinism(runs: &Runs) -> Outcome {
    let (cfg, first) = runs.tables.first().ok_or("criterion 4 did not run")?;
    let again = run_desk(Family::Ssp, cfg).map_err(|e| e.to_string())?;
    let (a, b) = (first.to_csv(), again.to_csv());
    if a.as_bytes() == b.as_bytes() {
        Ok(format!("{} CSV bytes identical", a.len()))
    } else {
        Err(format!("CSV differs:\n{a}\n{b}"))
    }
}

fn main() -> ExitCode {
    // the test runner passes its own flags; listing must report no tests
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut runs = Runs { tables: Vec::new() };
    let results = [
        oracle_exactness(),
        formula_checks(),
        evaluators(),
        recovery(&mut runs),
        monotone_in_k(&mut runs),
        coverage_near_optimal(&mut runs),
        prior_knowledge(&mut runs),
        trainer_contract(&runs),
        determinism(&runs),
    ];
    let mut ok = true;
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(msg) => println!("criterion {}: PASS {msg}", i + 1),
            Err(msg) => {
                ok = false;
                println!("criterion {}: FAIL {msg}", i + 1);
            }
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
