// Copyright 2026 The stprep Authors
// SPDX-License-Identifier: Apache-2.0

//! Supervised training data and evaluation suites.
//!
//! Labels come from an exhaustive one-step oracle: the action whose next
//! state has the highest fidelity to the target. Rollouts stop as soon as
//! no action strictly improves the fidelity, so the stored data never
//! contains a local optimum.

use std::f64::consts::PI;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{Dynamics, Qubits};
use crate::error::{Error, Result};
use crate::quantum::{
    phase_fix, ChannelKind, CompositeChannel, DensityMatrix, PureState, SystemState, C64,
};
use crate::rng::{derive_seed, fnv1a, seeded, stage_seed};

pub const ENCODING_VERSION: u32 = 1;
const DATASET_MAGIC: &str = "STPREP-DATASET";
const DATASET_FORMAT: u32 = 1;

/// How a (current, target) pair is turned into network input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    /// Phase-fixed `(Re, Im)` of each current amplitude, then of each target
    /// amplitude. Length `4d`.
    PurePair,
    /// `(Re, Im)` of every density-matrix entry (row-major), then the
    /// phase-fixed target. Length `2d^2 + 2d`.
    DensityPair,
}

impl Encoding {
    pub fn feature_len(self, d: usize) -> usize {
        match self {
            Encoding::PurePair => 4 * d,
            Encoding::DensityPair => 2 * d * d + 2 * d,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Encoding::PurePair => "pure-pair",
            Encoding::DensityPair => "density-pair",
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pure-pair" => Ok(Encoding::PurePair),
            "density-pair" => Ok(Encoding::DensityPair),
            other => Err(Error::Format(format!("unknown encoding '{other}'"))),
        }
    }
}

/// Noise applied after every pulse step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: ChannelKind,
    pub p: f64,
}

impl NoiseSpec {
    pub fn channel(&self, qubits: Qubits) -> Result<CompositeChannel> {
        CompositeChannel::for_qubits(self.kind, self.p, qubits.count())
    }

    pub fn to_field(spec: Option<&NoiseSpec>) -> String {
        match spec {
            Some(n) => format!("{}:{}", n.kind, n.p),
            None => "none".into(),
        }
    }

    pub fn from_field(s: &str) -> Result<Option<NoiseSpec>> {
        if s == "none" {
            return Ok(None);
        }
        let (kind, p) = s
            .split_once(':')
            .ok_or_else(|| Error::Format(format!("bad noise field '{s}'")))?;
        let p: f64 = p
            .parse()
            .map_err(|_| Error::Format(format!("bad noise probability '{p}'")))?;
        Ok(Some(NoiseSpec {
            kind: kind.parse()?,
            p,
        }))
    }
}

fn push_amplitudes(out: &mut Vec<f64>, amps: &[C64]) {
    for a in amps {
        out.push(a.re);
        out.push(a.im);
    }
}

/// Network features for a pure (current, target) pair.
pub fn encode_pure_pair(current: &PureState, target: &PureState) -> Result<Vec<f64>> {
    if current.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            found: current.dim(),
        });
    }
    let mut out = Vec::with_capacity(4 * current.dim());
    push_amplitudes(&mut out, phase_fix(current).amplitudes());
    push_amplitudes(&mut out, phase_fix(target).amplitudes());
    Ok(out)
}

/// Network features for a (density matrix, target) pair.
pub fn encode_density_pair(rho: &DensityMatrix, target: &PureState) -> Result<Vec<f64>> {
    let d = rho.dim();
    if d != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            found: d,
        });
    }
    let mut out = Vec::with_capacity(2 * d * d + 2 * d);
    let m = rho.matrix();
    for r in 0..d {
        for c in 0..d {
            out.push(m[(r, c)].re);
            out.push(m[(r, c)].im);
        }
    }
    push_amplitudes(&mut out, phase_fix(target).amplitudes());
    Ok(out)
}

pub fn encode(encoding: Encoding, current: &SystemState, target: &PureState) -> Result<Vec<f64>> {
    match (encoding, current) {
        (Encoding::PurePair, SystemState::Pure(s)) => encode_pure_pair(s, target),
        (Encoding::PurePair, SystemState::Mixed(_)) => Err(Error::Mismatch(
            "pure-pair encoding cannot represent a mixed state".into(),
        )),
        (Encoding::DensityPair, state) => encode_density_pair(&state.to_density(), target),
    }
}

/// Inverse of [`encode_pure_pair`] (up to the removed global phases).
pub fn decode_pure_pair(features: &[f64]) -> Result<(PureState, PureState)> {
    let d = features.len() / 4;
    if !features.len().is_multiple_of(4) || !(d == 2 || d == 4) {
        return Err(Error::DimensionMismatch {
            expected: 8,
            found: features.len(),
        });
    }
    let amps = |chunk: &[f64]| -> Vec<C64> {
        chunk.chunks(2).map(|p| C64::new(p[0], p[1])).collect()
    };
    Ok((
        PureState::normalized(amps(&features[..2 * d]))?,
        PureState::normalized(amps(&features[2 * d..]))?,
    ))
}

/// State after taking `action`, with noise applied after the unitary step.
pub fn next_state(
    current: &SystemState,
    action: usize,
    dynamics: &Dynamics,
    noise: Option<&CompositeChannel>,
) -> Result<SystemState> {
    match (current, noise) {
        (SystemState::Pure(s), None) => Ok(SystemState::Pure(dynamics.step(s, action)?)),
        (state, noise) => Ok(SystemState::Mixed(dynamics.step_density(
            &state.to_density(),
            action,
            noise,
        )?)),
    }
}

/// Exhaustive one-step search: the action maximizing next-step fidelity.
/// Ties go to the lowest index.
pub fn best_action_oracle(
    current: &SystemState,
    target: &PureState,
    dynamics: &Dynamics,
    noise: Option<&CompositeChannel>,
) -> Result<(usize, f64)> {
    dynamics.check_state_dim(current.dim())?;
    dynamics.check_state_dim(target.dim())?;
    if let Some(ch) = noise {
        dynamics.check_noise(ch)?;
    }
    let mut best = (0, f64::NEG_INFINITY);
    for a in 0..dynamics.action_count() {
        let f = next_state(current, a, dynamics, noise)?.fidelity_to(target)?;
        if f > best.1 {
            best = (a, f);
        }
    }
    Ok(best)
}

/// True when no action strictly improves on the current fidelity.
pub fn is_local_optimum(
    current: &SystemState,
    target: &PureState,
    dynamics: &Dynamics,
    noise: Option<&CompositeChannel>,
) -> Result<bool> {
    let now = current.fidelity_to(target)?;
    let (_, next) = best_action_oracle(current, target, dynamics, noise)?;
    Ok(next <= now)
}

/// Normalized vector of `d` standard complex Gaussians.
pub fn sample_haar_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<PureState> {
    let amps: Vec<C64> = (0..d)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    PureState::normalized(amps)
}

/// One supervised example: features of a (state, target) pair and the
/// oracle's action for it.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: usize,
    pub fidelity_before: f64,
    pub fidelity_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub qubits: Qubits,
    pub sample_count: usize,
    pub seed: u64,
    pub noise: Option<NoiseSpec>,
    /// Maximum rollout length; defaults to the control step cap.
    pub rollout_cap: usize,
    /// Number of independently seeded shards. Output depends on it.
    pub workers: usize,
}

impl DatasetConfig {
    pub fn new(qubits: Qubits, sample_count: usize, seed: u64) -> Self {
        Self {
            qubits,
            sample_count,
            seed,
            noise: None,
            rollout_cap: 20,
            workers: 1,
        }
    }

    /// Default sizes: 2e5 samples for one qubit, 5e5 for two.
    pub fn default_for(qubits: Qubits, seed: u64) -> Self {
        let count = match qubits {
            Qubits::One => 200_000,
            Qubits::Two => 500_000,
        };
        Self::new(qubits, count, seed)
    }

    pub fn encoding(&self) -> Encoding {
        if self.noise.is_some() {
            Encoding::DensityPair
        } else {
            Encoding::PurePair
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::InvalidParameter("sample_count must be positive".into()));
        }
        if self.rollout_cap == 0 {
            return Err(Error::InvalidParameter("rollout_cap must be positive".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidParameter("workers must be positive".into()));
        }
        if let Some(n) = &self.noise {
            if !(0.0..=1.0).contains(&n.p) {
                return Err(Error::InvalidParameter(format!(
                    "noise parameter {} outside [0, 1]",
                    n.p
                )));
            }
        }
        Ok(())
    }
}

/// Everything a consumer needs to check that a dataset fits a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub qubits: Qubits,
    pub action_set: String,
    pub action_count: usize,
    pub dt: f64,
    pub encoding: Encoding,
    pub encoding_version: u32,
    pub seed: u64,
    pub noise: Option<NoiseSpec>,
    pub feature_len: usize,
    /// Free-form provenance label (no whitespace), e.g. a config digest.
    pub tag: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn label_histogram(&self) -> Vec<usize> {
        let mut counts = vec![0; self.header.action_count];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    /// Splits off the first `count` samples into a separate dataset.
    pub fn split_at(&self, count: usize) -> (Dataset, Dataset) {
        let count = count.min(self.samples.len());
        let head = Dataset {
            header: self.header.clone(),
            samples: self.samples[..count].to_vec(),
        };
        let tail = Dataset {
            header: self.header.clone(),
            samples: self.samples[count..].to_vec(),
        };
        (head, tail)
    }
}

fn rollout_shard(
    cfg: &DatasetConfig,
    dynamics: &Dynamics,
    noise: Option<&CompositeChannel>,
    encoding: Encoding,
    seed: u64,
    quota: usize,
) -> Result<Vec<Sample>> {
    let mut rng = seeded(seed);
    let d = dynamics.dim();
    let threshold = dynamics.config().fidelity_threshold;
    let mut out = Vec::with_capacity(quota);
    while out.len() < quota {
        let init = sample_haar_state(d, &mut rng)?;
        let target = sample_haar_state(d, &mut rng)?;
        let mut state = match noise {
            Some(_) => SystemState::Mixed(init.to_density()),
            None => SystemState::Pure(init),
        };
        let mut fid = state.fidelity_to(&target)?;
        for _ in 0..cfg.rollout_cap {
            if fid > threshold || out.len() == quota {
                break;
            }
            let (action, next) = best_action_oracle(&state, &target, dynamics, noise)?;
            if next <= fid {
                break;
            }
            out.push(Sample {
                features: encode(encoding, &state, &target)?,
                label: action,
                fidelity_before: fid,
                fidelity_after: next,
            });
            state = next_state(&state, action, dynamics, noise)?;
            fid = next;
        }
    }
    Ok(out)
}

/// Rolls Haar-random (initial, target) pairs forward under oracle labels.
///
/// Shard `i` of `workers` draws from substream
/// `derive_seed(stage_seed(seed, "data"), i)` and
/// contributes `count / workers` samples (the first `count % workers`
/// shards one more). Shards are concatenated in index order.
pub fn generate_dataset(cfg: &DatasetConfig, dynamics: &Dynamics) -> Result<Dataset> {
    cfg.validate()?;
    if cfg.qubits != dynamics.qubits() {
        return Err(Error::Mismatch(format!(
            "dataset is for {} qubit(s), dynamics for {}",
            cfg.qubits,
            dynamics.qubits()
        )));
    }
    let noise = cfg.noise.map(|n| n.channel(cfg.qubits)).transpose()?;
    let encoding = cfg.encoding();
    let base = cfg.sample_count / cfg.workers;
    let extra = cfg.sample_count % cfg.workers;
    let run = |i: usize| {
        let quota = base + usize::from(i < extra);
        rollout_shard(
            cfg,
            dynamics,
            noise.as_ref(),
            encoding,
            derive_seed(stage_seed(cfg.seed, "data"), i as u64),
            quota,
        )
    };
    let shards: Vec<Vec<Sample>> = if cfg.workers == 1 {
        vec![run(0)?]
    } else {
        (0..cfg.workers)
            .into_par_iter()
            .map(run)
            .collect::<Result<Vec<_>>>()?
    };
    let d = dynamics.dim();
    Ok(Dataset {
        header: DatasetHeader {
            qubits: cfg.qubits,
            action_set: dynamics.actions().id(),
            action_count: dynamics.action_count(),
            dt: dynamics.config().dt,
            encoding,
            encoding_version: ENCODING_VERSION,
            seed: cfg.seed,
            noise: cfg.noise,
            feature_len: encoding.feature_len(d),
            tag: None,
        },
        samples: shards.into_iter().flatten().collect(),
    })
}

/// A fixed list of evaluation states.
#[derive(Clone, Debug, PartialEq)]
pub struct TestSuite {
    pub id: String,
    pub description: String,
    pub seed: Option<u64>,
    pub states: Vec<PureState>,
}

impl TestSuite {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, PureState::dim)
    }

    /// One state per line, amplitudes as `Re Im` pairs.
    pub fn write_table<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# suite={} count={} seed={}", self.id, self.len(), self.seed.map_or("none".into(), |s| s.to_string()))?;
        writeln!(w, "# {}", self.description)?;
        for s in &self.states {
            let cols: Vec<String> = s
                .amplitudes()
                .iter()
                .flat_map(|a| [a.re.to_string(), a.im.to_string()])
                .collect();
            writeln!(w, "{}", cols.join("\t"))?;
        }
        Ok(())
    }
}

/// Reads the state rows of a table written by [`TestSuite::write_table`].
pub fn read_suite_table<R: BufRead>(r: R) -> Result<Vec<PureState>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let vals = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Format(format!("line {}: {e}", i + 1)))?;
        let amps = vals.chunks(2).map(|p| C64::new(p[0], p.get(1).copied().unwrap_or(0.0)));
        out.push(PureState::new(amps.collect())?);
    }
    Ok(out)
}

/// 8 polar angles `(j + 1/2) pi / 8` times 16 azimuths `k pi / 8`.
pub fn bloch_grid_128() -> TestSuite {
    let mut states = Vec::with_capacity(128);
    for j in 0..8 {
        let theta = (j as f64 + 0.5) * PI / 8.0;
        for k in 0..16 {
            let phi = k as f64 * PI / 8.0;
            let amps = vec![
                C64::new((theta / 2.0).cos(), 0.0),
                C64::from_polar((theta / 2.0).sin(), phi),
            ];
            states.push(PureState::new(amps).expect("grid point has unit norm"));
        }
    }
    TestSuite {
        id: "bloch128".into(),
        description: "single-qubit Bloch grid, theta=(j+1/2)pi/8, phi=k pi/8".into(),
        seed: None,
        states,
    }
}

/// Magnitudes of a point on the unit 3-sphere in hyperspherical angles.
pub fn hypersphere_point(t1: f64, t2: f64, t3: f64) -> [f64; 4] {
    [
        t1.cos(),
        t1.sin() * t2.cos(),
        t1.sin() * t2.sin() * t3.cos(),
        t1.sin() * t2.sin() * t3.sin(),
    ]
}

/// All 27 * 64 candidate two-qubit states: angles in `{pi/8, pi/4, 3pi/8}`
/// and per-component phases in `{0, pi/2, pi, 3pi/2}` with the first fixed
/// to 0.
pub fn hypersphere_pool() -> Vec<PureState> {
    let angles = [PI / 8.0, PI / 4.0, 3.0 * PI / 8.0];
    let mut pool = Vec::with_capacity(27 * 64);
    for &t1 in &angles {
        for &t2 in &angles {
            for &t3 in &angles {
                let c = hypersphere_point(t1, t2, t3);
                for code in 0..64u32 {
                    let phase = |slot: u32| ((code >> (2 * slot)) & 3) as f64 * PI / 2.0;
                    let amps = vec![
                        C64::new(c[0], 0.0),
                        C64::from_polar(c[1], phase(0)),
                        C64::from_polar(c[2], phase(1)),
                        C64::from_polar(c[3], phase(2)),
                    ];
                    pool.push(PureState::new(amps).expect("hypersphere point has unit norm"));
                }
            }
        }
    }
    pool
}

/// 256 distinct states drawn uniformly from [`hypersphere_pool`].
pub fn hypersphere_testset_256(seed: u64) -> TestSuite {
    let pool = hypersphere_pool();
    let mut rng = seeded(seed);
    let picks = index::sample(&mut rng, pool.len(), 256);
    TestSuite {
        id: "hypersphere256".into(),
        description: "two-qubit hypersphere grid, 256 draws without replacement".into(),
        seed: Some(seed),
        states: picks.into_iter().map(|i| pool[i].clone()).collect(),
    }
}

fn record_payload(sample: &Sample) -> Vec<u8> {
    let mut buf = Vec::with_capacity(20 + 8 * sample.features.len());
    buf.extend_from_slice(&(sample.label as u32).to_le_bytes());
    buf.extend_from_slice(&sample.fidelity_before.to_le_bytes());
    buf.extend_from_slice(&sample.fidelity_after.to_le_bytes());
    for f in &sample.features {
        buf.extend_from_slice(&f.to_le_bytes());
    }
    buf
}

fn header_line(h: &DatasetHeader, count: usize) -> String {
    let tag = match &h.tag {
        Some(t) => format!(" tag={t}"),
        None => String::new(),
    };
    format!(
        "{DATASET_MAGIC} {DATASET_FORMAT} qubits={} actions={} action_count={} dt={} encoding={} encoding_version={} seed={} noise={} features={} count={}{tag}",
        h.qubits,
        h.action_set,
        h.action_count,
        h.dt,
        h.encoding,
        h.encoding_version,
        h.seed,
        NoiseSpec::to_field(h.noise.as_ref()),
        h.feature_len,
        count
    )
}

/// Writes a text header line, then per sample a `u32` payload length, the
/// payload (label, fidelities, features; little endian) and its FNV-1a
/// checksum.
pub fn write_dataset<W: Write>(dataset: &Dataset, w: W) -> Result<()> {
    if let Some(t) = &dataset.header.tag {
        if t.is_empty() || t.chars().any(char::is_whitespace) {
            return Err(Error::InvalidParameter(format!("dataset tag '{t}' must be one word")));
        }
    }
    let mut w = BufWriter::new(w);
    writeln!(w, "{}", header_line(&dataset.header, dataset.len()))?;
    for s in &dataset.samples {
        let payload = record_payload(s);
        w.write_all(&(payload.len() as u32).to_le_bytes())?;
        w.write_all(&payload)?;
        w.write_all(&fnv1a(&payload).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    write_dataset(dataset, File::create(path)?)
}

fn parse_header(line: &str) -> Result<(DatasetHeader, usize)> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(DATASET_MAGIC) {
        return Err(Error::Format("not a dataset file".into()));
    }
    match parts.next() {
        Some(v) if v == DATASET_FORMAT.to_string() => {}
        other => {
            return Err(Error::Format(format!(
                "unsupported dataset format version {other:?}"
            )))
        }
    }
    let mut fields = std::collections::HashMap::new();
    for p in parts {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("bad header field '{p}'")))?;
        fields.insert(k, v);
    }
    let get = |k: &str| {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| Error::Format(format!("header is missing '{k}'")))
    };
    fn num<T: FromStr>(k: &str, v: &str) -> Result<T> {
        v.parse()
            .map_err(|_| Error::Format(format!("header field {k}='{v}' is not a number")))
    }
    let qubits = Qubits::from_count(num("qubits", get("qubits")?)?)?;
    let header = DatasetHeader {
        qubits,
        action_set: get("actions")?.to_string(),
        action_count: num("action_count", get("action_count")?)?,
        dt: num("dt", get("dt")?)?,
        encoding: get("encoding")?.parse()?,
        encoding_version: num("encoding_version", get("encoding_version")?)?,
        seed: num("seed", get("seed")?)?,
        noise: NoiseSpec::from_field(get("noise")?)?,
        feature_len: num("features", get("features")?)?,
        tag: fields.get("tag").map(|t| t.to_string()),
    };
    if header.encoding_version != ENCODING_VERSION {
        return Err(Error::Mismatch(format!(
            "dataset encoding version {} (this build reads {ENCODING_VERSION})",
            header.encoding_version
        )));
    }
    if header.feature_len != header.encoding.feature_len(qubits.dim()) {
        return Err(Error::Format(format!(
            "feature length {} inconsistent with {} encoding",
            header.feature_len, header.encoding
        )));
    }
    Ok((header, num("count", get("count")?)?))
}

pub fn read_dataset<R: Read>(r: R) -> Result<Dataset> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let (header, count) = parse_header(line.trim_end())?;
    let expected_len = 20 + 8 * header.feature_len;
    let mut samples = Vec::with_capacity(count);
    let corrupt = |index: usize, reason: &str| Error::CorruptRecord {
        index,
        reason: reason.to_string(),
    };
    let mut payload = vec![0u8; expected_len];
    for index in 0..count {
        let mut len = [0u8; 4];
        r.read_exact(&mut len).map_err(|_| corrupt(index, "truncated"))?;
        if u32::from_le_bytes(len) as usize != expected_len {
            return Err(corrupt(index, "unexpected record length"));
        }
        r.read_exact(&mut payload).map_err(|_| corrupt(index, "truncated"))?;
        let mut sum = [0u8; 8];
        r.read_exact(&mut sum).map_err(|_| corrupt(index, "truncated"))?;
        if u64::from_le_bytes(sum) != fnv1a(&payload) {
            return Err(corrupt(index, "checksum mismatch"));
        }
        let f64_at = |off: usize| f64::from_le_bytes(payload[off..off + 8].try_into().unwrap());
        let label = u32::from_le_bytes(payload[..4].try_into().unwrap()) as usize;
        let sample = Sample {
            label,
            fidelity_before: f64_at(4),
            fidelity_after: f64_at(12),
            features: (0..header.feature_len).map(|i| f64_at(20 + 8 * i)).collect(),
        };
        if label >= header.action_count {
            return Err(corrupt(index, "label out of range"));
        }
        if !(sample.fidelity_after > sample.fidelity_before) {
            return Err(corrupt(index, "fidelity does not improve"));
        }
        if sample.features.iter().any(|f| !f.is_finite()) {
            return Err(corrupt(index, "non-finite feature"));
        }
        samples.push(sample);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format(format!("trailing bytes after {count} records")));
    }
    Ok(Dataset { header, samples })
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    read_dataset(File::open(path)?)
}
