use usco::harness::presets::{preset, run_desk, ssp_preset};
use usco::harness::{mean_std, performance_ratio, ExperimentConfig, ResultTable, CSV_HEADER};
use usco::{DistSpec, Family, Sense, UscoError};

#[test]
fn performance_ratio_examples() {
    assert_eq!(performance_ratio(Sense::Minimize, 12.0, 10.0), Some(1.2));
    assert_eq!(performance_ratio(Sense::Maximize, 8.0, 10.0), Some(1.25));
    assert_eq!(performance_ratio(Sense::Maximize, 7.0, 7.0), Some(1.0));
    assert_eq!(performance_ratio(Sense::Minimize, 3.0, 3.0), Some(1.0));
    assert_eq!(performance_ratio(Sense::Maximize, 0.0, 4.0), None);
    assert_eq!(performance_ratio(Sense::Minimize, 4.0, 0.0), None);
}

#[test]
fn mean_std_examples() {
    assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
    let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(m, 2.5);
    assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    assert!(mean_std(&[]).0.is_nan());
}

fn small(family: Family) -> ExperimentConfig {
    let mut cfg = preset(family);
    cfg.ks = vec![4];
    cfg.dists.truncate(1);
    cfg.train_size = 12;
    cfg.test_size = 20;
    cfg.runs = 2;
    cfg.params = usco::trainer::TrainerParams::for_train_size(12);
    cfg
}

fn check_table(cfg: &ExperimentConfig, table: &ResultTable) {
    let csv = table.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), 1 + cfg.dists.len() * cfg.ks.len());
    assert_eq!(table.records.len(), cfg.runs * (1 + cfg.dists.len() * cfg.ks.len()));
    for row in &table.rows {
        assert_eq!(row.runs + row.failed, cfg.runs);
        assert!(row.mean_ratio >= 1.0 - 1e-9 || row.dist != "rand" && row.dist != "base", "{row:?}");
        assert!(row.wall_time_s.is_none());
    }
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",NA")));
}

#[test]
fn small_experiments_are_deterministic() {
    for family in [Family::Ssp, Family::Ssc, Family::Sbm] {
        let cfg = small(family);
        let a = run_desk(family, &cfg).unwrap();
        check_table(&cfg, &a);
        let b = run_desk(family, &cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv(), "{family:?}");
        let mut other = cfg.clone();
        other.master_seed += 1;
        assert_ne!(run_desk(family, &other).unwrap().to_csv(), a.to_csv());
    }
}

#[test]
fn whole_pool_single_run_is_deterministic() {
    let mut cfg = small(Family::Sbm);
    cfg.runs = 1;
    cfg.pool_size = 8;
    cfg.ks = vec![8];
    let a = run_desk(Family::Sbm, &cfg).unwrap().to_csv();
    assert_eq!(a, run_desk(Family::Sbm, &cfg).unwrap().to_csv());
}

#[test]
fn wall_time_column() {
    let mut cfg = small(Family::Sbm);
    cfg.wall_time = true;
    let csv = run_desk(Family::Sbm, &cfg).unwrap().to_csv();
    assert!(csv.lines().skip(1).all(|l| !l.ends_with(",NA")));
}

#[test]
fn invalid_configs_are_rejected() {
    let base = small(Family::Ssp);
    let mut bad = vec![];
    let mut c = base.clone();
    c.runs = 0;
    bad.push(c);
    let mut c = base.clone();
    c.train_size = 0;
    bad.push(c);
    let mut c = base.clone();
    c.ks = vec![0];
    bad.push(c);
    let mut c = base.clone();
    c.ks = vec![c.pool_size + 1];
    bad.push(c);
    let mut c = base.clone();
    c.params.c_reg = -1.0;
    bad.push(c);
    for c in bad {
        assert!(matches!(c.validate(), Err(UscoError::Config(_) | UscoError::Domain(_))), "{c:?}");
        assert!(run_desk(Family::Ssp, &c).is_err());
    }
    base.validate().unwrap();
}

#[test]
fn preset_shapes() {
    let cfg = ssp_preset();
    assert_eq!(cfg.dists, vec![DistSpec::PhiExp, DistSpec::PhiTrue]);
    assert_eq!(cfg.ks, vec![16, 160, 1600]);
    assert_eq!((cfg.train_size, cfg.test_size, cfg.runs, cfg.pool_size), (160, 640, 5, 10_000));
    for f in [Family::Ssp, Family::Ssc, Family::Sbm] {
        preset(f).validate().unwrap();
    }
}

#[test]
fn more_configurations_help_on_matching() {
    // uniform costs carry no information; a tight law around the truth does
    let mut cfg = preset(Family::Sbm);
    cfg.dists = vec![DistSpec::PhiUni, DistSpec::PhiQ { q: 0.3 }];
    cfg.ks = vec![16];
    cfg.runs = 2;
    cfg.test_size = 100;
    let t = run_desk(Family::Sbm, &cfg).unwrap();
    let uni = t.row("phi_uni", 16).unwrap().mean_ratio;
    let tight = t.row("phi_0.3", 16).unwrap().mean_ratio;
    let rand = t.row("rand", 0).unwrap().mean_ratio;
    assert!(tight < uni && uni <= rand + 1e-9, "{tight} {uni} {rand}");
}
