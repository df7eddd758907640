//! JSON-lines files for instances, pairs, pools and trained models.
//!
//! Every file starts with a header record `{"format", "version", "family"}`
//! followed by one JSON document per line.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Benchmark, ConfigPool, PairOf};
use crate::error::{Result, UscoError};
use crate::framework::{
    kernel_features, Configuration, ConfigurationSample, DistSpec, Family, Problem, Provenance,
    ScoreModel, Sense, WeightVector,
};
use crate::trainer::{TrainOutcome, TrainerParams};

pub const FORMAT_VERSION: u32 = 1;

/// Probe features must regenerate to within this absolute tolerance.
pub const PROBE_TOL: f64 = 1e-12;

/// Objective-trace entries kept in a model file.
pub const TRACE_TAIL: usize = 10;

pub const INSTANCE_FORMAT: &str = "usco-instance";
pub const PAIRS_FORMAT: &str = "usco-pairs";
pub const POOL_FORMAT: &str = "usco-pool";
pub const MODEL_FORMAT: &str = "usco-model";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub family: Family,
}

pub fn to_jsonl<T: Serialize>(format: &str, family: Family, records: &[T]) -> Result<String> {
    let header = Header {
        format: format.to_string(),
        version: FORMAT_VERSION,
        family,
    };
    let mut out = serde_json::to_string(&header)?;
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parses records after checking the header against `format` and `family`.
pub fn from_jsonl<T: DeserializeOwned>(text: &str, format: &str, family: Family) -> Result<Vec<T>> {
    read_lines(text.lines().map(|l| Ok(l.to_string())), format, family)
}

fn read_lines<T: DeserializeOwned>(
    mut lines: impl Iterator<Item = Result<String>>,
    format: &str,
    family: Family,
) -> Result<Vec<T>> {
    let first = lines
        .next()
        .transpose()?
        .ok_or_else(|| UscoError::format("header", "empty file"))?;
    let header: Header = serde_json::from_str(&first).map_err(|e| UscoError::Parse {
        line: 1,
        msg: format!("bad header: {e}"),
    })?;
    if header.format != format {
        return Err(UscoError::format(
            "format",
            format!("expected {format}, found {}", header.format),
        ));
    }
    if header.version != FORMAT_VERSION {
        return Err(UscoError::format(
            "version",
            format!("expected {FORMAT_VERSION}, found {}", header.version),
        ));
    }
    if header.family != family {
        return Err(UscoError::format(
            "family",
            format!("expected {family}, found {}", header.family),
        ));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| UscoError::Parse {
            line: i + 2,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, format: &str, family: Family, records: &[T]) -> Result<()> {
    let text = to_jsonl(format, family, records)?;
    let file = fs::File::create(path).map_err(|e| UscoError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| UscoError::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path, format: &str, family: Family) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| UscoError::io(path, e))?;
    let lines = BufReader::new(file).lines().map(|l| l.map_err(|e| UscoError::io(path, e)));
    read_lines(lines, format, family)
}

fn single<T>(mut v: Vec<T>, what: &str) -> Result<T> {
    if v.len() != 1 {
        return Err(UscoError::format(what, format!("expected one record, found {}", v.len())));
    }
    Ok(v.pop().unwrap())
}

pub fn save_instance<B: Benchmark>(inst: &B, path: &Path) -> Result<()> {
    write_jsonl(path, INSTANCE_FORMAT, B::FAMILY, std::slice::from_ref(inst))
}

pub fn load_instance<B: Benchmark>(path: &Path) -> Result<B> {
    single(read_jsonl(path, INSTANCE_FORMAT, B::FAMILY)?, "instance")
}

pub fn save_pairs<B: Benchmark>(pairs: &[PairOf<B::P>], path: &Path) -> Result<()> {
    write_jsonl(path, PAIRS_FORMAT, B::FAMILY, pairs)
}

pub fn load_pairs<B: Benchmark>(inst: &B, path: &Path) -> Result<Vec<PairOf<B::P>>> {
    let pairs: Vec<PairOf<B::P>> = read_jsonl(path, PAIRS_FORMAT, B::FAMILY)?;
    for (i, p) in pairs.iter().enumerate() {
        inst.problem()
            .check_feasible(&p.x, &p.y_ref)
            .map_err(|e| UscoError::format(format!("pairs[{i}]"), e.to_string()))?;
    }
    Ok(pairs)
}

/// Second record of a pool file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolMeta {
    pub dist: DistSpec,
    pub master_seed: u64,
    pub size: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PoolLine<C> {
    Meta(PoolMeta),
    Config(Configuration<C>),
}

pub fn save_pool<B: Benchmark>(
    dist: DistSpec,
    master_seed: u64,
    configs: &[Configuration<<B::P as Problem>::Config>],
    path: &Path,
) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| UscoError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header = Header {
        format: POOL_FORMAT.into(),
        version: FORMAT_VERSION,
        family: B::FAMILY,
    };
    let meta = PoolMeta {
        dist,
        master_seed,
        size: configs.len(),
    };
    let mut put = |v: String| -> Result<()> {
        w.write_all(v.as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .map_err(|e| UscoError::io(path, e))
    };
    put(serde_json::to_string(&header)?)?;
    put(serde_json::to_string(&meta)?)?;
    for c in configs {
        put(serde_json::to_string(c)?)?;
    }
    w.flush().map_err(|e| UscoError::io(path, e))
}

pub fn load_pool<B: Benchmark>(inst: &B, path: &Path) -> Result<ConfigPool<<B::P as Problem>::Config>> {
    let lines: Vec<PoolLine<<B::P as Problem>::Config>> = read_jsonl(path, POOL_FORMAT, B::FAMILY)?;
    let mut it = lines.into_iter();
    let meta = match it.next() {
        Some(PoolLine::Meta(m)) => m,
        _ => return Err(UscoError::format("pool", "missing pool metadata record")),
    };
    let mut configs = Vec::with_capacity(meta.size);
    for (i, line) in it.enumerate() {
        let c = match line {
            PoolLine::Config(c) => c,
            PoolLine::Meta(_) => return Err(UscoError::format("pool", "repeated metadata record")),
        };
        if c.config_id != i {
            return Err(UscoError::format(
                "config_id",
                format!("expected {i}, found {}", c.config_id),
            ));
        }
        inst.problem()
            .validate_config(&c.payload)
            .map_err(|e| UscoError::format(format!("configs[{i}]"), e.to_string()))?;
        configs.push(c);
    }
    if configs.len() != meta.size {
        return Err(UscoError::format(
            "size",
            format!("header says {}, file holds {}", meta.size, configs.len()),
        ));
    }
    Ok(ConfigPool::Inline {
        dist: meta.dist,
        master_seed: meta.master_seed,
        configs,
    })
}

/// Hex SHA-256 of the JSON encoding of the configuration payloads.
pub fn config_checksum<C: Serialize>(payloads: &[&C]) -> Result<String> {
    let bytes = serde_json::to_vec(payloads)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainerMeta {
    pub params: TrainerParams,
    pub trace_tail: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub slack: f64,
}

impl TrainerMeta {
    pub fn of(params: &TrainerParams, outcome: &TrainOutcome) -> Self {
        let t = &outcome.objective_trace;
        TrainerMeta {
            params: params.clone(),
            trace_tail: t[t.len().saturating_sub(TRACE_TAIL)..].to_vec(),
            converged: outcome.converged,
            iterations: outcome.iterations,
            slack: outcome.slack,
        }
    }
}

/// A pair and its kernel features recorded at save time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Probe<B: Benchmark> {
    pub x: <B::P as Problem>::Input,
    pub y: <B::P as Problem>::Solution,
    pub features: Vec<f64>,
}

/// A trained model with enough provenance to rebuild its configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ModelArtifact<B: Benchmark> {
    pub family: Family,
    pub sense: Sense,
    pub alpha: f64,
    pub instance: B,
    pub dist_spec: DistSpec,
    pub master_seed: u64,
    pub config_ids: Vec<usize>,
    pub sub_seeds: Vec<u64>,
    /// Present only when the configurations cannot be regenerated from
    /// seeds alone.
    pub configs: Option<Vec<<B::P as Problem>::Config>>,
    pub weights: WeightVector,
    pub trainer: TrainerMeta,
    pub checksum: String,
    pub probe: Option<Probe<B>>,
}

impl<B: Benchmark> ModelArtifact<B> {
    /// `inline` stores the payloads; otherwise only seeds are kept.
    pub fn new(
        instance: B,
        sample: &ConfigurationSample<<B::P as Problem>::Config>,
        weights: WeightVector,
        trainer: TrainerMeta,
        probe: Option<(<B::P as Problem>::Input, <B::P as Problem>::Solution)>,
        inline: bool,
    ) -> Result<Self> {
        if weights.len() != sample.k() {
            return Err(UscoError::Dimension {
                expected: sample.k(),
                got: weights.len(),
            });
        }
        let payloads: Vec<_> = sample.payloads().collect();
        let checksum = config_checksum(&payloads)?;
        let problem = instance.problem();
        let probe = match probe {
            Some((x, y)) => {
                let features = kernel_features(problem, &x, &y, sample)?;
                Some(Probe { x, y, features })
            }
            None => None,
        };
        Ok(ModelArtifact {
            family: B::FAMILY,
            sense: problem.sense(),
            alpha: problem.alpha(),
            dist_spec: sample.dist_spec,
            master_seed: sample.master_seed,
            config_ids: sample.configs.iter().map(|c| c.config_id).collect(),
            sub_seeds: sample.configs.iter().map(|c| c.provenance.sub_seed).collect(),
            configs: inline.then(|| payloads.into_iter().cloned().collect()),
            weights,
            trainer,
            checksum,
            probe,
            instance,
        })
    }

    /// Rebuilds the configuration sample from inline payloads or seeds.
    pub fn sample(&self) -> Result<ConfigurationSample<<B::P as Problem>::Config>> {
        let k = self.config_ids.len();
        if self.sub_seeds.len() != k {
            return Err(UscoError::format("sub_seeds", format!("expected {k} entries")));
        }
        if self.weights.len() != k {
            return Err(UscoError::format("weights", format!("expected {k} entries")));
        }
        let payloads = match &self.configs {
            Some(c) if c.len() == k => c.clone(),
            Some(_) => return Err(UscoError::format("configs", format!("expected {k} entries"))),
            None => self
                .sub_seeds
                .iter()
                .map(|&s| self.instance.sample_config(&self.dist_spec, s))
                .collect::<Result<_>>()?,
        };
        let name = self.dist_spec.name();
        Ok(ConfigurationSample {
            configs: payloads
                .into_iter()
                .zip(self.config_ids.iter().zip(&self.sub_seeds))
                .map(|(payload, (&config_id, &sub_seed))| Configuration {
                    config_id,
                    payload,
                    provenance: Provenance {
                        dist: name.clone(),
                        sub_seed,
                    },
                })
                .collect(),
            dist_spec: self.dist_spec,
            master_seed: self.master_seed,
        })
    }

    /// Checks family, sense, checksum and probe features.
    pub fn verify(&self) -> Result<ConfigurationSample<<B::P as Problem>::Config>> {
        let problem = self.instance.problem();
        if self.family != B::FAMILY {
            return Err(UscoError::format("family", format!("expected {}", B::FAMILY)));
        }
        if self.sense != problem.sense() || self.alpha != problem.alpha() {
            return Err(UscoError::format("sense", "does not match the instance"));
        }
        let sample = self.sample()?;
        let payloads: Vec<_> = sample.payloads().collect();
        if config_checksum(&payloads)? != self.checksum {
            return Err(UscoError::format("checksum", "regenerated configurations differ"));
        }
        if let Some(p) = &self.probe {
            let f = kernel_features(problem, &p.x, &p.y, &sample)?;
            if f.len() != p.features.len() || f.iter().zip(&p.features).any(|(a, b)| (a - b).abs() > PROBE_TOL) {
                return Err(UscoError::format("probe", "regenerated features differ"));
            }
        }
        Ok(sample)
    }

    pub fn model(&self) -> Result<ScoreModel<<B::P as Problem>::Config>> {
        ScoreModel::for_problem(self.instance.problem(), self.verify()?, self.weights.clone())
    }
}

pub fn save_model<B: Benchmark>(artifact: &ModelArtifact<B>, path: &Path) -> Result<()> {
    write_jsonl(path, MODEL_FORMAT, B::FAMILY, std::slice::from_ref(artifact))
}

/// Loads and verifies a model file.
pub fn load_model<B: Benchmark>(path: &Path) -> Result<ModelArtifact<B>> {
    let a: ModelArtifact<B> = single(read_jsonl(path, MODEL_FORMAT, B::FAMILY)?, "model")?;
    a.verify()?;
    Ok(a)
}

pub const PREDICTIONS_FORMAT: &str = "usco-predictions";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction<I, S> {
    pub x: I,
    pub y: S,
}
