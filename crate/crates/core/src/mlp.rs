// Copyright 2026 The stprep Authors
// SPDX-License-Identifier: Apache-2.0

//! Fully connected policy network with a softmax output over actions.
//!
//! Hidden layers are affine maps followed by a rectifier. Training
//! minimizes cross-entropy against one-hot oracle labels with mini-batch
//! Adam.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::control::{ActionSet, Qubits};
use crate::dataset::{Dataset, DatasetHeader, Encoding, NoiseSpec, ENCODING_VERSION};
use crate::error::{Error, Result};
use crate::rng::{fnv1a, seeded, stage_seed};

const MODEL_MAGIC: &str = "STPREP-MODEL";
const MODEL_FORMAT: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Relu,
}

impl Activation {
    fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
        }
    }
}

/// What the network was trained for. Checked before inference or training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub qubits: Qubits,
    pub action_set: String,
    pub encoding: Encoding,
    pub encoding_version: u32,
    pub noise: Option<NoiseSpec>,
    pub train_seed: u64,
    /// Free-form provenance label, e.g. a config digest.
    pub tag: Option<String>,
}

impl ModelMeta {
    pub fn new(qubits: Qubits, actions: &ActionSet, encoding: Encoding, train_seed: u64) -> Self {
        Self {
            qubits,
            action_set: actions.id(),
            encoding,
            encoding_version: ENCODING_VERSION,
            noise: None,
            train_seed,
            tag: None,
        }
    }

    /// Metadata matching a dataset's header.
    pub fn for_dataset(header: &DatasetHeader, train_seed: u64) -> Self {
        Self {
            qubits: header.qubits,
            action_set: header.action_set.clone(),
            encoding: header.encoding,
            encoding_version: header.encoding_version,
            noise: header.noise,
            train_seed,
            tag: None,
        }
    }

    pub fn ensure_actions(&self, actions: &ActionSet) -> Result<()> {
        if self.qubits != actions.qubits() || self.action_set != actions.id() {
            return Err(Error::Mismatch(format!(
                "model was trained for action set {} ({} qubit(s)), got {} ({} qubit(s))",
                self.action_set,
                self.qubits,
                actions.id(),
                actions.qubits()
            )));
        }
        Ok(())
    }

    pub fn ensure_dataset(&self, header: &DatasetHeader) -> Result<()> {
        if self.qubits != header.qubits {
            return Err(Error::Mismatch(format!(
                "model is for {} qubit(s), dataset for {}",
                self.qubits, header.qubits
            )));
        }
        if self.action_set != header.action_set {
            return Err(Error::Mismatch(format!(
                "model action set {} differs from dataset action set {}",
                self.action_set, header.action_set
            )));
        }
        if self.encoding != header.encoding || self.encoding_version != header.encoding_version {
            return Err(Error::Mismatch(format!(
                "model expects {} v{} features, dataset has {} v{}",
                self.encoding, self.encoding_version, header.encoding, header.encoding_version
            )));
        }
        Ok(())
    }
}

/// `y = x W + b` with `W` stored as `inputs x outputs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    layer_sizes: Vec<usize>,
    layers: Vec<Layer>,
    activation: Activation,
    meta: ModelMeta,
}

/// Parameter gradients, one entry per layer.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

/// Input width, the hidden widths, and the action count.
pub fn default_layer_sizes(qubits: Qubits, encoding: Encoding) -> Vec<usize> {
    let input = encoding.feature_len(qubits.dim());
    let mut sizes = vec![input];
    match qubits {
        Qubits::One => sizes.extend([256, 64, 32, 32, 8, 8]),
        Qubits::Two => sizes.extend([256, 128, 64, 16, 16]),
    }
    sizes
}

fn relu_inplace(z: &mut Array2<f64>) {
    z.mapv_inplace(|v| v.max(0.0));
}

fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax_action(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

impl MlpModel {
    /// Weights from `N(0, 2 / fan_in)`, zero biases.
    pub fn init(layer_sizes: &[usize], seed: u64, meta: ModelMeta) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "invalid layer sizes {layer_sizes:?}"
            )));
        }
        let mut rng = seeded(seed);
        let layers = layer_sizes
            .windows(2)
            .map(|w| {
                let scale = (2.0 / w[0] as f64).sqrt();
                Layer {
                    weights: Array2::from_shape_simple_fn((w[0], w[1]), || {
                        scale * rng.sample::<f64, _>(StandardNormal)
                    }),
                    bias: Array1::zeros(w[1]),
                }
            })
            .collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            layers,
            activation: Activation::Relu,
            meta,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_len(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// Hidden activations of every layer (input included) and the output
    /// probabilities.
    fn forward_cached(&self, x: ArrayView2<f64>) -> (Vec<Array2<f64>>, Array2<f64>) {
        let mut acts = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.weights) + &layer.bias;
            acts.push(a);
            if i < last {
                match self.activation {
                    Activation::Relu => relu_inplace(&mut z),
                }
            } else {
                softmax_rows(&mut z);
            }
            a = z;
        }
        (acts, a)
    }

    /// Output probabilities for a batch of feature rows.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_len() {
            return Err(Error::DimensionMismatch {
                expected: self.input_len(),
                found: x.ncols(),
            });
        }
        Ok(self.forward_cached(x).1)
    }

    pub fn forward(&self, features: &[f64]) -> Result<Vec<f64>> {
        let x = ArrayView2::from_shape((1, features.len()), features)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(self.forward_batch(x)?.into_raw_vec_and_offset().0)
    }

    pub fn predict(&self, features: &[f64]) -> Result<usize> {
        Ok(argmax_action(&self.forward(features)?))
    }

    /// Mean cross-entropy over the batch and its parameter gradients.
    pub fn loss_and_gradients(&self, x: ArrayView2<f64>, labels: &[usize]) -> Result<(f64, Gradients)> {
        if x.ncols() != self.input_len() {
            return Err(Error::DimensionMismatch {
                expected: self.input_len(),
                found: x.ncols(),
            });
        }
        if x.nrows() != labels.len() || labels.is_empty() {
            return Err(Error::InvalidParameter("batch and labels disagree".into()));
        }
        let n = labels.len() as f64;
        let (acts, probs) = self.forward_cached(x);
        let mut loss = 0.0;
        let mut delta = probs;
        for (r, &y) in labels.iter().enumerate() {
            if y >= self.output_len() {
                return Err(Error::ActionOutOfRange {
                    index: y,
                    count: self.output_len(),
                });
            }
            loss -= delta[(r, y)].max(f64::MIN_POSITIVE).ln();
            delta[(r, y)] -= 1.0;
        }
        delta.mapv_inplace(|v| v / n);

        let mut grads = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let a = &acts[i];
            let dw = a.t().dot(&delta);
            let db = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut prev = delta.dot(&layer.weights.t());
                // Rectifier derivative: the stored activation is positive
                // exactly where the pre-activation was.
                ndarray::Zip::from(&mut prev).and(a).for_each(|d, &act| {
                    if act <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = prev;
            }
            grads.push(Layer { weights: dw, bias: db });
        }
        grads.reverse();
        Ok((loss / n, Gradients { layers: grads }))
    }

    /// Adds `scale * direction` to every parameter.
    pub fn perturb(&mut self, direction: &Gradients, scale: f64) {
        for (l, d) in self.layers.iter_mut().zip(&direction.layers) {
            l.weights.scaled_add(scale, &d.weights);
            l.bias.scaled_add(scale, &d.bias);
        }
    }

    pub fn ensure_dataset(&self, header: &DatasetHeader) -> Result<()> {
        self.meta.ensure_dataset(header)?;
        if header.feature_len != self.input_len() || header.action_count != self.output_len() {
            return Err(Error::Mismatch(format!(
                "model maps {} features to {} actions, dataset has {} features and {} actions",
                self.input_len(),
                self.output_len(),
                header.feature_len,
                header.action_count
            )));
        }
        Ok(())
    }
}

/// Fraction of samples whose argmax prediction equals the label.
pub fn accuracy(model: &MlpModel, dataset: &Dataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let idx: Vec<usize> = (0..dataset.len()).collect();
    accuracy_on(model, dataset, &idx)
}

fn gather(dataset: &Dataset, idx: &[usize], width: usize) -> (Array2<f64>, Vec<usize>) {
    let mut x = Array2::zeros((idx.len(), width));
    let mut y = Vec::with_capacity(idx.len());
    for (r, &i) in idx.iter().enumerate() {
        let s = &dataset.samples[i];
        x.row_mut(r)
            .iter_mut()
            .zip(&s.features)
            .for_each(|(dst, src)| *dst = *src);
        y.push(s.label);
    }
    (x, y)
}

fn accuracy_on(model: &MlpModel, dataset: &Dataset, idx: &[usize]) -> Result<f64> {
    if idx.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut correct = 0usize;
    for chunk in idx.chunks(4096) {
        let (x, y) = gather(dataset, chunk, model.input_len());
        let probs = model.forward_batch(x.view())?;
        for (row, &label) in probs.rows().into_iter().zip(&y) {
            if argmax_action(row.as_slice().expect("standard layout")) == label {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / idx.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Share of the data held out for the per-epoch accuracy.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// Batch 64, rate 5e-4, 200 epochs (one qubit); batch 128, rate 1e-3,
    /// 100 epochs (two qubits). 10% held out.
    pub fn for_qubits(qubits: Qubits, seed: u64) -> Self {
        match qubits {
            Qubits::One => Self {
                batch_size: 64,
                learning_rate: 5e-4,
                epochs: 200,
                validation_fraction: 0.1,
                seed,
            },
            Qubits::Two => Self {
                batch_size: 128,
                learning_rate: 1e-3,
                epochs: 100,
                validation_fraction: 0.1,
                seed,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidParameter(
                "batch_size and epochs must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::InvalidParameter(
                "validation_fraction must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    pub loss: f64,
    pub heldout_accuracy: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub loss: Vec<f64>,
    /// Accuracy on the held-out share (on the training share when nothing
    /// is held out).
    pub heldout_accuracy: Vec<f64>,
    pub train_samples: usize,
    pub heldout_samples: usize,
    pub wall_time_secs: f64,
}

struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Vec<Layer>,
    v: Vec<Layer>,
}

impl Adam {
    fn new(model: &MlpModel) -> Self {
        let zeros = || {
            model
                .layers
                .iter()
                .map(|l| Layer {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect::<Vec<_>>()
        };
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    fn update(&mut self, model: &mut MlpModel, grads: &Gradients, lr: f64) {
        self.step += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let c1 = 1.0 - b1.powi(self.step);
        let c2 = 1.0 - b2.powi(self.step);
        let apply = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        };
        for (((layer, g), m), v) in model
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            ndarray::Zip::from(&mut layer.weights)
                .and(&g.weights)
                .and(&mut m.weights)
                .and(&mut v.weights)
                .for_each(|p, &g, m, v| apply(p, g, m, v));
            ndarray::Zip::from(&mut layer.bias)
                .and(&g.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .for_each(|p, &g, m, v| apply(p, g, m, v));
        }
    }
}

pub fn train(model: &mut MlpModel, dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainReport> {
    train_with(model, dataset, cfg, |_, _| {})
}

/// Trains in place, calling `on_epoch` after every epoch.
///
/// The held-out indices are a seeded permutation prefix; batches are
/// reshuffled each epoch from the same seed, so the result depends only on
/// the data and `cfg`.
pub fn train_with<F>(
    model: &mut MlpModel,
    dataset: &Dataset,
    cfg: &TrainConfig,
    mut on_epoch: F,
) -> Result<TrainReport>
where
    F: FnMut(&EpochStats, &MlpModel),
{
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    model.ensure_dataset(&dataset.header)?;
    let started = Instant::now();

    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut seeded(stage_seed(cfg.seed, "split")));
    let held = ((dataset.len() as f64) * cfg.validation_fraction).round() as usize;
    let held = held.min(dataset.len() - 1);
    let (heldout, mut train_idx) = (order[..held].to_vec(), order[held..].to_vec());
    train_idx.sort_unstable();

    let mut rng = seeded(stage_seed(cfg.seed, "shuffle"));
    let mut adam = Adam::new(model);
    let mut report = TrainReport {
        train_samples: train_idx.len(),
        heldout_samples: heldout.len(),
        ..TrainReport::default()
    };
    for epoch in 1..=cfg.epochs {
        train_idx.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in train_idx.chunks(cfg.batch_size) {
            let (x, y) = gather(dataset, batch, model.input_len());
            let (loss, grads) = model.loss_and_gradients(x.view(), &y)?;
            if !loss.is_finite() {
                return Err(Error::Diverged(format!(
                    "non-finite loss {loss} in epoch {epoch}"
                )));
            }
            total += loss * batch.len() as f64;
            adam.update(model, &grads, cfg.learning_rate);
        }
        let loss = total / train_idx.len() as f64;
        let acc = if heldout.is_empty() {
            accuracy_on(model, dataset, &train_idx)?
        } else {
            accuracy_on(model, dataset, &heldout)?
        };
        report.loss.push(loss);
        report.heldout_accuracy.push(acc);
        on_epoch(
            &EpochStats {
                epoch,
                loss,
                heldout_accuracy: acc,
            },
            model,
        );
    }
    if !model.is_finite() {
        return Err(Error::Diverged("non-finite parameters after training".into()));
    }
    report.wall_time_secs = started.elapsed().as_secs_f64();
    Ok(report)
}

fn params_bytes(model: &MlpModel) -> Vec<u8> {
    let mut buf = Vec::with_capacity(8 * model.parameter_count());
    for l in &model.layers {
        for v in l.weights.iter().chain(l.bias.iter()) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

/// Text header (one `key=value` per line, ending in `data`) followed by the
/// little-endian `f64` parameters: each layer's weights row-major, then its
/// bias.
pub fn write_model<W: Write>(model: &MlpModel, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    let m = &model.meta;
    let params = params_bytes(model);
    let sizes: Vec<String> = model.layer_sizes.iter().map(|s| s.to_string()).collect();
    writeln!(w, "{MODEL_MAGIC} {MODEL_FORMAT}")?;
    writeln!(w, "qubits={}", m.qubits)?;
    writeln!(w, "action_set={}", m.action_set)?;
    writeln!(w, "encoding={}", m.encoding)?;
    writeln!(w, "encoding_version={}", m.encoding_version)?;
    match &m.noise {
        Some(n) => writeln!(w, "noise={}:{}", n.kind, n.p)?,
        None => writeln!(w, "noise=none")?,
    }
    writeln!(w, "train_seed={}", m.train_seed)?;
    if let Some(t) = &m.tag {
        if t.contains('\n') {
            return Err(Error::InvalidParameter("model tag must be a single line".into()));
        }
        writeln!(w, "tag={t}")?;
    }
    writeln!(w, "activation={}", model.activation.name())?;
    writeln!(w, "layers={}", sizes.join(","))?;
    writeln!(w, "params={}", model.parameter_count())?;
    writeln!(w, "checksum={:016x}", fnv1a(&params))?;
    writeln!(w, "data")?;
    w.write_all(&params)?;
    w.flush()?;
    Ok(())
}

pub fn save_model(model: &MlpModel, path: &Path) -> Result<()> {
    write_model(model, File::create(path)?)
}

pub fn read_model<R: Read>(r: R) -> Result<MlpModel> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != format!("{MODEL_MAGIC} {MODEL_FORMAT}") {
        return Err(Error::Format(format!(
            "not a model file (or unsupported version): '{}'",
            line.trim_end()
        )));
    }
    let mut fields = std::collections::HashMap::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Format("model header is truncated".into()));
        }
        let l = line.trim_end();
        if l == "data" {
            break;
        }
        let (k, v) = l
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("bad model header line '{l}'")))?;
        fields.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| {
        fields
            .get(k)
            .cloned()
            .ok_or_else(|| Error::Format(format!("model header is missing '{k}'")))
    };
    let bad = |k: &str| Error::Format(format!("model header field '{k}' is malformed"));
    let qubits = Qubits::from_count(get("qubits")?.parse().map_err(|_| bad("qubits"))?)?;
    let noise = match get("noise")?.as_str() {
        "none" => None,
        s => {
            let (kind, p) = s.split_once(':').ok_or_else(|| bad("noise"))?;
            Some(NoiseSpec {
                kind: kind.parse()?,
                p: p.parse().map_err(|_| bad("noise"))?,
            })
        }
    };
    let meta = ModelMeta {
        qubits,
        action_set: get("action_set")?,
        encoding: get("encoding")?.parse()?,
        encoding_version: get("encoding_version")?.parse().map_err(|_| bad("encoding_version"))?,
        noise,
        train_seed: get("train_seed")?.parse().map_err(|_| bad("train_seed"))?,
        tag: fields.get("tag").cloned(),
    };
    if get("activation")? != Activation::Relu.name() {
        return Err(bad("activation"));
    }
    let sizes: Vec<usize> = get("layers")?
        .split(',')
        .map(|s| s.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad("layers"))?;
    let mut model = MlpModel::init(&sizes, 0, meta)?;
    let count: usize = get("params")?.parse().map_err(|_| bad("params"))?;
    if count != model.parameter_count() {
        return Err(Error::Format(format!(
            "header declares {count} parameters, layers imply {}",
            model.parameter_count()
        )));
    }
    let mut buf = vec![0u8; 8 * count];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Format("parameter block is truncated".into()))?;
    let expected = u64::from_str_radix(&get("checksum")?, 16).map_err(|_| bad("checksum"))?;
    if fnv1a(&buf) != expected {
        return Err(Error::Format("parameter checksum mismatch".into()));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after parameter block".into()));
    }
    let mut vals = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    for l in &mut model.layers {
        for v in l.weights.iter_mut().chain(l.bias.iter_mut()) {
            *v = vals.next().expect("count checked above");
        }
    }
    if !model.is_finite() {
        return Err(Error::Format("non-finite parameter".into()));
    }
    Ok(model)
}

pub fn load_model(path: &Path) -> Result<MlpModel> {
    read_model(File::open(path)?)
}

/// Loads a model and checks it was trained for `actions`.
pub fn load_model_for(path: &Path, actions: &ActionSet) -> Result<MlpModel> {
    let model = load_model(path)?;
    model.meta.ensure_actions(actions)?;
    Ok(model)
}
