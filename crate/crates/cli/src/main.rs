//! `usco`: instance, pool and pair generation, training, prediction and
//! the desk-scale experiment presets.

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use usco::datagen::{gen_config_pool, gen_ssc_instance, gen_ssp_instance, PoolSpec, PowerLawSpec, DEFAULT_POOL_SIZE};
use usco::harness::io::{self as uio, ModelArtifact, Prediction, TrainerMeta, PREDICTIONS_FORMAT};
use usco::harness::presets::{self, sbm_desk_instance, ssc_desk_instance, ssp_desk_instance};
use usco::harness::{self, draw_indices, pool_seed, Benchmark, ConfigPool, ExperimentConfig, PairOf};
use usco::sbm::{MatchGraph, SbmInstance};
use usco::ssc::{random_cover_graph, SscInstance};
use usco::ssp::{kronecker_graph, parse_dimacs, SspInstance};
use usco::trainer::{train_one_slack, TrainerParams};
use usco::{
    perturbed_prediction_weights, predict_many, DistSpec, Family, Problem, Result, ScoreModel, UscoError,
};

const WORKERS_ENV: &str = "USCO_WORKERS";

#[derive(Parser)]
#[command(name = "usco", version, about = "Learning combinatorial solvers from input-solution pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a problem instance with its ground-truth law.
    GenInstance(GenInstance),
    /// Generate a configuration pool.
    GenPool(GenPool),
    /// Generate labeled input-solution pairs.
    GenPairs(GenPairs),
    /// Train a model on labeled pairs.
    Train(Train),
    /// Predict solutions for the inputs of a pairs file.
    Predict(Predict),
    /// Mean performance ratio of a model on a pairs file.
    Eval(Eval),
    /// Run a desk-scale preset experiment and write its CSV table.
    Reproduce(Reproduce),
}

#[derive(Args)]
struct GenInstance {
    family: Family,
    /// Seed for a fresh instance; without it the shipped desk instance is written.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// DIMACS `.gr` graph for the shortest-path family.
    #[arg(long)]
    dimacs: Option<PathBuf>,
    /// Shortest path: Kronecker levels (2^levels nodes).
    #[arg(long, default_value_t = 6)]
    levels: u32,
    /// Shortest path: target edge count.
    #[arg(long, default_value_t = 160)]
    edges: usize,
    /// Coverage: left side size.
    #[arg(long, default_value_t = 200)]
    left: usize,
    /// Coverage: right side size.
    #[arg(long, default_value_t = 500)]
    right: usize,
    /// Coverage: maximum left degree.
    #[arg(long, default_value_t = 15)]
    max_degree: usize,
    /// Matching: nodes per side.
    #[arg(long, default_value_t = 32)]
    size: usize,
}

#[derive(Args)]
struct GenPool {
    family: Family,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    dist: DistSpec,
    #[arg(long, default_value_t = DEFAULT_POOL_SIZE)]
    pool_size: usize,
    #[arg(long, default_value_t = presets::DEFAULT_MASTER_SEED)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenPairs {
    family: Family,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 800)]
    n: usize,
    #[arg(long, default_value_t = presets::DEFAULT_MASTER_SEED)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Power-law scale of input sizes (coverage and matching).
    #[arg(long)]
    size_scale: Option<f64>,
}

#[derive(Args, Clone)]
struct TrainerFlags {
    #[arg(long)]
    c_reg: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    margin_factor: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
}

impl TrainerFlags {
    fn apply(&self, params: &mut TrainerParams) {
        if let Some(v) = self.c_reg {
            params.c_reg = v;
        }
        if let Some(v) = self.eta {
            params.eta = v;
        }
        if let Some(v) = self.margin_factor {
            params.margin_factor = v;
        }
        if let Some(v) = self.tol {
            params.tol = v;
        }
    }
}

#[derive(Args)]
struct Train {
    family: Family,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    pairs: PathBuf,
    /// Pool file; without it configurations are regenerated from `--seed`.
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(long, default_value = "phi_true")]
    dist: DistSpec,
    #[arg(long, default_value_t = 160)]
    k: usize,
    /// Use only the first `n` pairs.
    #[arg(long)]
    train_size: Option<usize>,
    #[arg(long, default_value_t = presets::DEFAULT_MASTER_SEED)]
    seed: u64,
    #[command(flatten)]
    trainer: TrainerFlags,
    /// Store configuration payloads in the model instead of seeds only.
    #[arg(long)]
    inline: bool,
    /// Write the per-iteration training log here as CSV.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Predict {
    family: Family,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    pairs: PathBuf,
    /// Predict with perturbed weights.
    #[arg(long)]
    perturb: bool,
    #[arg(long, default_value_t = presets::DEFAULT_MASTER_SEED)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Eval {
    family: Family,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    perturb: bool,
    #[arg(long, default_value_t = presets::DEFAULT_MASTER_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Reproduce {
    family: Family,
    #[arg(long, default_value_t = presets::DEFAULT_MASTER_SEED)]
    seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated K grid overriding the preset.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// Comma-separated distributions overriding the preset.
    #[arg(long, value_delimiter = ',')]
    dist: Option<Vec<DistSpec>>,
    #[arg(long)]
    train_size: Option<usize>,
    #[arg(long)]
    test_size: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[command(flatten)]
    trainer: TrainerFlags,
    #[arg(long)]
    perturb: bool,
    /// Skip the Base/Rand baseline row.
    #[arg(long)]
    no_baseline: bool,
    /// Report wall time instead of NA.
    #[arg(long)]
    wall_time: bool,
    /// Also write per-run records as JSON-lines.
    #[arg(long)]
    records: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(code) = init_workers() {
        return code;
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn init_workers() -> std::result::Result<(), ExitCode> {
    let Ok(v) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = match v.parse() {
        Ok(n) if n > 0 => n,
        _ => {
            eprintln!("error: {WORKERS_ENV} must be a positive integer, got {v:?}");
            return Err(ExitCode::from(2));
        }
    };
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| {
        eprintln!("error: cannot start {n} workers: {e}");
        ExitCode::from(3)
    })
}

/// 2 for bad input or configuration, 3 for failures while running.
fn exit_code(e: &UscoError) -> u8 {
    match e {
        UscoError::Config(_)
        | UscoError::Format { .. }
        | UscoError::Parse { .. }
        | UscoError::Io { .. }
        | UscoError::Json(_)
        | UscoError::Dimension { .. } => 2,
        _ => 3,
    }
}

macro_rules! dispatch {
    ($family:expr, $f:ident, $a:expr) => {
        match $family {
            Family::Ssp => $f::<SspInstance>($a),
            Family::Ssc => $f::<SscInstance>($a),
            Family::Sbm => $f::<SbmInstance>($a),
        }
    };
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenInstance(a) => gen_instance(&a),
        Command::GenPool(a) => dispatch!(a.family, gen_pool, &a),
        Command::GenPairs(a) => dispatch!(a.family, gen_pairs, &a),
        Command::Train(a) => dispatch!(a.family, train, &a),
        Command::Predict(a) => dispatch!(a.family, predict, &a),
        Command::Eval(a) => dispatch!(a.family, eval, &a),
        Command::Reproduce(a) => reproduce(&a),
    }
}

fn gen_instance(a: &GenInstance) -> Result<()> {
    match a.family {
        Family::Ssp => {
            let inst = match (&a.dimacs, a.seed) {
                (Some(path), seed) => {
                    let f = fs::File::open(path).map_err(|e| UscoError::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    let g = parse_dimacs(BufReader::new(f))?.graph;
                    let law = gen_ssp_instance(&g, seed.unwrap_or(presets::DEFAULT_MASTER_SEED));
                    SspInstance::new(g, law)?
                }
                (None, Some(seed)) => {
                    let g = kronecker_graph(a.levels, a.edges, seed)?;
                    let law = gen_ssp_instance(&g, seed);
                    SspInstance::new(g, law)?
                }
                (None, None) => ssp_desk_instance(),
            };
            uio::save_instance(&inst, &a.out)
        }
        Family::Ssc => {
            let inst = match a.seed {
                Some(seed) => {
                    let g = random_cover_graph(a.left, a.right, a.max_degree, seed)?;
                    let law = gen_ssc_instance(&g, seed);
                    SscInstance::new(g, law)?
                }
                None => ssc_desk_instance(),
            };
            uio::save_instance(&inst, &a.out)
        }
        Family::Sbm => {
            let inst = match a.seed {
                Some(seed) => SbmInstance::new(MatchGraph::random(a.size, seed)?)?,
                None => sbm_desk_instance(),
            };
            uio::save_instance(&inst, &a.out)
        }
    }
}

fn gen_pool<B: Benchmark>(a: &GenPool) -> Result<()> {
    let inst: B = uio::load_instance(&a.instance)?;
    let spec = PoolSpec {
        dist_spec: a.dist,
        pool_size: a.pool_size,
        master_seed: a.seed,
    };
    let configs = gen_config_pool(&inst, &spec)?;
    uio::save_pool::<B>(a.dist, a.seed, &configs, &a.out)
}

fn size_spec(family: Family, scale: Option<f64>) -> PowerLawSpec {
    let mut spec = presets::preset(family).sizes;
    if let Some(s) = scale {
        spec.scale = s;
    }
    spec
}

fn gen_pairs<B: Benchmark>(a: &GenPairs) -> Result<()> {
    let inst: B = uio::load_instance(&a.instance)?;
    let pairs = inst.gen_pairs(a.n, &size_spec(B::FAMILY, a.size_scale), a.seed)?;
    uio::save_pairs::<B>(&pairs, &a.out)
}

fn train<B: Benchmark>(a: &Train) -> Result<()> {
    let inst: B = uio::load_instance(&a.instance)?;
    let mut pairs = uio::load_pairs(&inst, &a.pairs)?;
    if let Some(n) = a.train_size {
        if n == 0 || n > pairs.len() {
            return Err(UscoError::Config(format!(
                "train size {n} outside 1..={}",
                pairs.len()
            )));
        }
        pairs.truncate(n);
    }
    let pool = match &a.pool {
        Some(path) => uio::load_pool(&inst, path)?,
        None => ConfigPool::Seeded {
            dist: a.dist,
            master_seed: pool_seed(a.seed, &a.dist),
            size: DEFAULT_POOL_SIZE,
        },
    };
    if a.k == 0 || a.k > pool.size() {
        return Err(UscoError::Config(format!("K = {} outside 1..={}", a.k, pool.size())));
    }
    let indices = draw_indices(a.seed, &pool.dist(), a.k, 0, pool.size());
    let sample = pool.draw(&inst, &indices)?;
    let mut params = TrainerParams::for_train_size(pairs.len());
    a.trainer.apply(&mut params);
    let outcome = train_one_slack(inst.problem(), &pairs, &sample, &params)?;
    if let Some(path) = &a.log {
        write_file(path, outcome.log_csv().as_bytes())?;
    }
    log::info!(
        "trained K={} in {} iterations, converged {}, slack {:.6}",
        a.k,
        outcome.iterations,
        outcome.converged,
        outcome.slack
    );
    let probe = pairs.first().map(|p| (p.x.clone(), p.y_ref.clone()));
    let meta = TrainerMeta::of(&params, &outcome);
    let artifact = ModelArtifact::new(inst, &sample, outcome.seed_weights, meta, probe, a.inline)?;
    uio::save_model(&artifact, &a.out)
}

fn load_weights<B: Benchmark>(
    artifact: &ModelArtifact<B>,
    m: usize,
    perturb: bool,
    seed: u64,
) -> Result<ScoreModel<<B::P as Problem>::Config>> {
    let mut model = artifact.model()?;
    if perturb {
        model.weights = perturbed_prediction_weights(&model.weights, m, artifact.alpha, seed)?;
    }
    Ok(model)
}

fn predictions<B: Benchmark>(
    model_path: &Path,
    pairs_path: &Path,
    perturb: bool,
    seed: u64,
) -> Result<(B, Vec<PairOf<B::P>>, Vec<<B::P as Problem>::Solution>)> {
    let artifact: ModelArtifact<B> = uio::load_model(model_path)?;
    let pairs = uio::load_pairs(&artifact.instance, pairs_path)?;
    let m = pairs.len().max(1);
    let model = load_weights(&artifact, m, perturb, seed)?;
    let inputs: Vec<_> = pairs.iter().map(|p| p.x.clone()).collect();
    let preds = predict_many(artifact.instance.problem(), &model, &inputs)?;
    Ok((artifact.instance, pairs, preds))
}

fn predict<B: Benchmark>(a: &Predict) -> Result<()> {
    let (_, pairs, preds) = predictions::<B>(&a.model, &a.pairs, a.perturb, a.seed)?;
    let records: Vec<Prediction<_, _>> = pairs
        .into_iter()
        .zip(preds)
        .map(|(p, y)| Prediction { x: p.x, y })
        .collect();
    uio::write_jsonl(&a.out, PREDICTIONS_FORMAT, B::FAMILY, &records)
}

fn eval<B: Benchmark>(a: &Eval) -> Result<()> {
    let (inst, pairs, preds) = predictions::<B>(&a.model, &a.pairs, a.perturb, a.seed)?;
    let sense = inst.problem().sense();
    let mut ratios = Vec::with_capacity(pairs.len());
    let mut excluded = 0;
    for (p, y) in pairs.iter().zip(&preds) {
        let f_pred = inst.true_objective(&p.x, y)?;
        let f_ref = inst.true_objective(&p.x, &p.y_ref)?;
        match harness::performance_ratio(sense, f_pred, f_ref) {
            Some(r) => ratios.push(r),
            None => excluded += 1,
        }
    }
    let (mean, std) = harness::mean_std(&ratios);
    let text = format!("pairs,mean_ratio,std_ratio,excluded\n{},{mean:.6},{std:.6},{excluded}\n", pairs.len());
    emit(a.out.as_deref(), &text)
}

fn reproduce(a: &Reproduce) -> Result<()> {
    let mut cfg: ExperimentConfig = presets::preset(a.family);
    cfg.master_seed = a.seed;
    if let Some(k) = &a.k {
        cfg.ks = k.clone();
    }
    if let Some(d) = &a.dist {
        cfg.dists = d.clone();
    }
    if let Some(n) = a.train_size {
        cfg.train_size = n;
        cfg.params = TrainerParams::for_train_size(n);
    }
    if let Some(n) = a.test_size {
        cfg.test_size = n;
    }
    if let Some(n) = a.runs {
        cfg.runs = n;
    }
    a.trainer.apply(&mut cfg.params);
    cfg.perturb = a.perturb;
    cfg.baseline = !a.no_baseline;
    cfg.wall_time = a.wall_time;
    let table = presets::run_desk(a.family, &cfg)?;
    for row in table.rows.iter().filter(|r| r.failed > 0) {
        log::warn!("{} K={}: {} of {} runs failed", row.dist, row.k, row.failed, cfg.runs);
    }
    if let Some(path) = &a.records {
        uio::write_jsonl(path, "usco-run-records", a.family, &table.records)?;
    }
    emit(a.out.as_deref(), &table.to_csv())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text.as_bytes()),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| UscoError::Io {
                path: PathBuf::from("<stdout>"),
                source: e,
            }),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| UscoError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

