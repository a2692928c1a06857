// Copyright 2026 The stprep Authors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration: an optional TOML file, overridden by flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stprep::baselines::{CrabConfig, GrapeConfig};
use stprep::control::Qubits;
use stprep::dataset::NoiseSpec;
use stprep::mlp::TrainConfig;

/// File layout. Every field is optional; missing values take the defaults
/// for the qubit count.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub qubits: Option<usize>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub control: ControlSection,
    pub dataset: DatasetSection,
    pub train: TrainSection,
    pub grape: GrapeSection,
    pub crab: CrabSection,
    pub bench: BenchSection,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSection {
    pub fidelity_threshold: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub samples: Option<usize>,
    pub rollout_cap: Option<usize>,
    pub channel: Option<String>,
    pub p: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub validation_fraction: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrapeSection {
    pub iterations: Option<usize>,
    pub step_size: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrabSection {
    pub basis_size: Option<usize>,
    pub max_evaluations: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub suite: Option<String>,
    pub pairing: Option<String>,
    pub pairs: Option<usize>,
    pub methods: Option<Vec<String>>,
    pub bin_width: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Fully resolved settings. Its JSON form is what the digest covers.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub qubits: Qubits,
    pub workers: usize,
    pub fidelity_threshold: f64,
    pub samples: usize,
    pub rollout_cap: usize,
    pub noise: Option<NoiseSpec>,
    pub train: TrainConfig,
    pub grape: GrapeConfig,
    pub crab: CrabConfig,
    pub suite: String,
    pub pairing: String,
    pub pairs: usize,
    pub methods: Vec<String>,
    pub bin_width: f64,
}

/// Values given on the command line; they win over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub qubits: Option<usize>,
    pub workers: Option<usize>,
    pub samples: Option<usize>,
    pub noise: Option<NoiseSpec>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub suite: Option<String>,
    pub pairing: Option<String>,
    pub pairs: Option<usize>,
    pub methods: Option<Vec<String>>,
    pub bin_width: Option<f64>,
}

pub const DEFAULT_SEED: u64 = 7;

impl RunConfig {
    pub fn resolve(file: &FileConfig, o: &Overrides) -> anyhow::Result<Self> {
        let seed = o.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
        let qubits = Qubits::from_count(o.qubits.or(file.qubits).unwrap_or(1))?;
        let workers = o.workers.or(file.workers).unwrap_or(1);
        if workers == 0 {
            bail!(stprep::Error::InvalidParameter("workers must be at least 1".into()));
        }
        let noise = match (&o.noise, &file.dataset.channel, file.dataset.p) {
            (Some(n), _, _) => Some(*n),
            (None, Some(kind), Some(p)) => Some(NoiseSpec {
                kind: kind.parse()?,
                p,
            }),
            (None, None, None) => None,
            _ => bail!(stprep::Error::InvalidParameter(
                "[dataset] needs both channel and p for noisy data".into()
            )),
        };
        let mut train = TrainConfig::for_qubits(qubits, seed);
        let t = &file.train;
        train.epochs = o.epochs.or(t.epochs).unwrap_or(train.epochs);
        train.batch_size = o.batch_size.or(t.batch_size).unwrap_or(train.batch_size);
        train.learning_rate = o.learning_rate.or(t.learning_rate).unwrap_or(train.learning_rate);
        train.validation_fraction = t.validation_fraction.unwrap_or(train.validation_fraction);
        train.validate()?;

        let mut grape = GrapeConfig::default();
        grape.iterations = file.grape.iterations.unwrap_or(grape.iterations);
        grape.step_size = file.grape.step_size.unwrap_or(grape.step_size);
        grape.epsilon = file.grape.epsilon.unwrap_or(grape.epsilon);
        grape.validate()?;
        let mut crab = CrabConfig {
            seed: stprep::rng::stage_seed(seed, "crab"),
            ..CrabConfig::default()
        };
        crab.basis_size = file.crab.basis_size.unwrap_or(crab.basis_size);
        crab.max_evaluations = file.crab.max_evaluations.unwrap_or(crab.max_evaluations);
        crab.validate()?;

        let b = &file.bench;
        let (default_suite, default_pairing) = match qubits {
            Qubits::One => ("bloch128", "fixed-initial"),
            Qubits::Two => ("hypersphere256", "random-pairs"),
        };
        let threshold = file.control.fidelity_threshold.unwrap_or(0.999);
        if !(threshold > 0.0 && threshold <= 1.0) {
            bail!(stprep::Error::InvalidParameter(format!(
                "fidelity threshold {threshold} must lie in (0, 1]"
            )));
        }
        Ok(Self {
            seed,
            qubits,
            workers,
            fidelity_threshold: threshold,
            samples: o
                .samples
                .or(file.dataset.samples)
                .unwrap_or(match qubits {
                    Qubits::One => 200_000,
                    Qubits::Two => 500_000,
                }),
            rollout_cap: file.dataset.rollout_cap.unwrap_or(20),
            noise,
            train,
            grape,
            crab,
            suite: o.suite.clone().or(b.suite.clone()).unwrap_or(default_suite.into()),
            pairing: o
                .pairing
                .clone()
                .or(b.pairing.clone())
                .unwrap_or(default_pairing.into()),
            pairs: o.pairs.or(b.pairs).unwrap_or(512),
            methods: o.methods.clone().or(b.methods.clone()).unwrap_or_else(|| {
                ["sp", "ga", "rg", "grape", "crab"].map(String::from).to_vec()
            }),
            bin_width: o.bin_width.or(b.bin_width).unwrap_or(0.05),
        })
    }

    /// SHA-256 over the command name, its arguments and this config.
    pub fn digest(&self, command: &str, args: &impl Serialize) -> String {
        let doc = serde_json::json!({ "command": command, "args": args, "config": self });
        hex::encode(Sha256::digest(doc.to_string().as_bytes()))
    }
}
