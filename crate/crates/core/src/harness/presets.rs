//! Desk-scale experiment presets, one per family.
//!
//! | family | instance | dists | K grid | train / test |
//! |---|---|---|---|---|
//! | ssp | 64 nodes, 160 edges, Weibull edge law | phi_exp, phi_true | 16, 160, 1600 | 160 / 640 |
//! | ssc | 200 x 500 cover graph, degree <= 15 | phi_uni, phi_true | 8, 16, 160, 320 | 160 / 640 |
//! | sbm | n = 32 complete bipartite | phi_uni, phi_true, phi_10, phi_5, phi_1, phi_0.3 | 16, 160, 320 | 160 / 640 |
//!
//! Instances are fixed; the master seed only drives pools, pairs and draws.

use super::ExperimentConfig;
use crate::datagen::{gen_ssc_instance, gen_ssp_instance, PowerLawSpec, DEFAULT_POOL_SIZE};
use crate::error::Result;
use crate::framework::{DistSpec, Family};
use crate::sbm::{desk_match_graph, SbmInstance, DESK_MATCH_SIZE};
use crate::ssc::{desk_cover_graph, SscInstance};
use crate::ssp::{desk_graph, SspInstance};
use crate::trainer::TrainerParams;

pub const DEFAULT_MASTER_SEED: u64 = 7;
pub const DESK_TRAIN_SIZE: usize = 160;
pub const DESK_TEST_SIZE: usize = 640;
pub const DESK_RUNS: usize = 5;

const SSP_LAW_SEED: u64 = 31;
const SSC_LAW_SEED: u64 = 37;

/// Power-law scale for SBM input sizes: the cover preset's 200 rescaled by
/// `32 / 128`, so a third of the inputs are partial.
pub const SBM_SIZE_SCALE: f64 = 50.0;

pub fn ssp_desk_instance() -> SspInstance {
    let g = desk_graph();
    let law = gen_ssp_instance(&g, SSP_LAW_SEED);
    SspInstance::new(g, law).expect("desk law matches its graph")
}

pub fn ssc_desk_instance() -> SscInstance {
    let g = desk_cover_graph();
    let law = gen_ssc_instance(&g, SSC_LAW_SEED);
    SscInstance::new(g, law).expect("desk law matches its graph")
}

pub fn sbm_desk_instance() -> SbmInstance {
    SbmInstance::new(desk_match_graph()).expect("desk graph is valid")
}

fn base_config(dataset: &str, dists: Vec<DistSpec>, ks: Vec<usize>, sizes: PowerLawSpec) -> ExperimentConfig {
    ExperimentConfig {
        dataset: dataset.to_string(),
        dists,
        ks,
        train_size: DESK_TRAIN_SIZE,
        test_size: DESK_TEST_SIZE,
        runs: DESK_RUNS,
        params: TrainerParams::for_train_size(DESK_TRAIN_SIZE),
        master_seed: DEFAULT_MASTER_SEED,
        pool_size: DEFAULT_POOL_SIZE,
        sizes,
        perturb: false,
        baseline: true,
        wall_time: false,
    }
}

pub fn ssp_preset() -> ExperimentConfig {
    base_config(
        "ssp-desk",
        vec![DistSpec::PhiExp, DistSpec::PhiTrue],
        vec![16, 160, 1600],
        PowerLawSpec::with_max(usize::MAX),
    )
}

pub fn ssc_preset() -> ExperimentConfig {
    let right = desk_cover_graph().right_count();
    base_config(
        "ssc-desk",
        vec![DistSpec::PhiUni, DistSpec::PhiTrue],
        vec![8, 16, 160, 320],
        PowerLawSpec::with_max(right),
    )
}

pub fn sbm_preset() -> ExperimentConfig {
    base_config(
        "sbm-desk",
        vec![
            DistSpec::PhiUni,
            DistSpec::PhiTrue,
            DistSpec::PhiQ { q: 10.0 },
            DistSpec::PhiQ { q: 5.0 },
            DistSpec::PhiQ { q: 1.0 },
            DistSpec::PhiQ { q: 0.3 },
        ],
        vec![16, 160, 320],
        PowerLawSpec {
            scale: SBM_SIZE_SCALE,
            ..PowerLawSpec::with_max(DESK_MATCH_SIZE)
        },
    )
}

/// Preset experiment for a family.
pub fn preset(family: Family) -> ExperimentConfig {
    match family {
        Family::Ssp => ssp_preset(),
        Family::Ssc => ssc_preset(),
        Family::Sbm => sbm_preset(),
    }
}

/// Runs `cfg` on the family's desk instance.
pub fn run_desk(family: Family, cfg: &ExperimentConfig) -> Result<super::ResultTable> {
    match family {
        Family::Ssp => super::run_experiment(&ssp_desk_instance(), cfg),
        Family::Ssc => super::run_experiment(&ssc_desk_instance(), cfg),
        Family::Sbm => super::run_experiment(&sbm_desk_instance(), cfg),
    }
}

