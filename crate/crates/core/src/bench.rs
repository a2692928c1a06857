// Copyright 2026 The stprep Authors
// SPDX-License-Identifier: Apache-2.0

//! Method-by-suite experiments: per-task records, suite means, noise
//! sweeps, fidelity histograms and Bloch-sphere trajectories.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{crab_prepare, greedy_prepare, grape_prepare, revised_greedy_prepare, CrabConfig, GrapeConfig};
use crate::control::Dynamics;
use crate::dataset::{Encoding, TestSuite};
use crate::error::{Error, Result};
use crate::mlp::MlpModel;
use crate::policy::{prepare, prepare_noisy, replay_noisy, PrepResult};
use crate::quantum::{bloch_from_density, ChannelKind, CompositeChannel, PureState, SystemState};
use crate::rng::{derive_seed, seeded};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sp,
    Ga,
    Rg,
    Grape,
    Crab,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Sp, Method::Ga, Method::Rg, Method::Grape, Method::Crab];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sp => "sp",
            Method::Ga => "ga",
            Method::Rg => "rg",
            Method::Grape => "grape",
            Method::Crab => "crab",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::InvalidParameter(format!(
                    "unknown method '{s}' (valid: {})",
                    names.join(", ")
                ))
            })
    }
}

/// How tasks are formed from a suite.
#[derive(Clone, Debug, PartialEq)]
pub enum Pairing {
    /// One task per suite state, all from the same initial state.
    FixedInitial { state: PureState, id: String },
    /// Every ordered pair of distinct suite states.
    AllOrderedPairs,
    /// `count` ordered pairs of distinct suite states drawn with replacement.
    RandomPairs { count: usize, seed: u64 },
}

impl Pairing {
    pub fn name(&self) -> String {
        match self {
            Pairing::FixedInitial { id, .. } => format!("fixed-initial({id})"),
            Pairing::AllOrderedPairs => "all-ordered-pairs".into(),
            Pairing::RandomPairs { count, seed } => format!("random-pairs({count},{seed})"),
        }
    }
}

/// One preparation task.
#[derive(Clone, Debug, PartialEq)]
pub struct Task {
    pub init: PureState,
    pub target: PureState,
    pub init_id: String,
    pub target_id: String,
}

/// Tasks implied by `pairing`, in a fixed order.
pub fn build_tasks(suite: &TestSuite, pairing: &Pairing) -> Result<Vec<Task>> {
    let n = suite.len();
    let sid = |i: usize| format!("{}#{i}", suite.id);
    let pair = |i: usize, j: usize| Task {
        init: suite.states[i].clone(),
        target: suite.states[j].clone(),
        init_id: sid(i),
        target_id: sid(j),
    };
    match pairing {
        Pairing::FixedInitial { state, id } => {
            if state.dim() != suite.dim() {
                return Err(Error::DimensionMismatch {
                    expected: suite.dim(),
                    found: state.dim(),
                });
            }
            Ok((0..n)
                .map(|j| Task {
                    init: state.clone(),
                    target: suite.states[j].clone(),
                    init_id: id.clone(),
                    target_id: sid(j),
                })
                .collect())
        }
        Pairing::AllOrderedPairs => Ok((0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| pair(i, j))
            .collect()),
        Pairing::RandomPairs { count, seed } => {
            if n < 2 {
                return Err(Error::InvalidParameter(
                    "random pairs need at least two suite states".into(),
                ));
            }
            let mut rng = seeded(*seed);
            Ok((0..*count)
                .map(|_| {
                    let i = rng.random_range(0..n);
                    let j = rng.random_range(0..n - 1);
                    pair(i, if j >= i { j + 1 } else { j })
                })
                .collect())
        }
    }
}

/// Everything a method may need besides the task.
#[derive(Clone, Debug, Default)]
pub struct MethodContext<'a> {
    pub model: Option<&'a MlpModel>,
    pub grape: GrapeConfig,
    pub crab: CrabConfig,
}

/// Runs `method` on one task. `seed` drives the randomized methods.
pub fn run_method(
    method: Method,
    task: &Task,
    dynamics: &Dynamics,
    ctx: &MethodContext<'_>,
    seed: u64,
) -> Result<PrepResult> {
    match method {
        Method::Sp => {
            let model = ctx
                .model
                .ok_or_else(|| Error::Mismatch("method sp needs a trained model".into()))?;
            prepare(model, &task.init, &task.target, dynamics)
        }
        Method::Ga => greedy_prepare(&task.init, &task.target, dynamics),
        Method::Rg => revised_greedy_prepare(&task.init, &task.target, dynamics, &mut seeded(seed)),
        Method::Grape => grape_prepare(&task.init, &task.target, dynamics, &ctx.grape),
        Method::Crab => {
            let cfg = CrabConfig {
                seed,
                ..ctx.crab.clone()
            };
            crab_prepare(&task.init, &task.target, dynamics, &cfg)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub method: Method,
    pub init_id: String,
    pub target_id: String,
    pub f_max: f64,
    pub final_fidelity: f64,
    pub steps_used: usize,
    pub terminated_by: String,
    pub design_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub os: String,
    pub arch: String,
    pub cpus: usize,
    pub version: String,
    pub workers: usize,
    /// Tasks ran one after another so design times are not contended.
    pub serial_timing: bool,
}

impl Environment {
    pub fn current(workers: usize, serial_timing: bool) -> Self {
        Self {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            version: env!("CARGO_PKG_VERSION").into(),
            workers,
            serial_timing,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    pub workers: usize,
    /// Forces serial execution so per-task design times are meaningful.
    pub timed: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            timed: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub method: Method,
    pub suite: String,
    pub pairing: String,
    pub seed: u64,
    pub records: Vec<TaskRecord>,
    pub mean_fidelity: f64,
    pub mean_design_time: f64,
    pub environment: Environment,
}

/// Arithmetic means of `f_max` and design time.
pub fn means(records: &[TaskRecord]) -> (f64, f64) {
    if records.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = records.len() as f64;
    (
        records.iter().map(|r| r.f_max).sum::<f64>() / n,
        records.iter().map(|r| r.design_time).sum::<f64>() / n,
    )
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

/// Maps `f` over the tasks in order, in parallel when allowed.
fn map_tasks<T, F>(tasks: &[Task], opts: RunOptions, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &Task) -> Result<T> + Sync,
{
    if opts.workers > 1 && !opts.timed {
        pool(opts.workers)?.install(|| {
            tasks
                .par_iter()
                .enumerate()
                .map(|(i, t)| f(i, t))
                .collect()
        })
    } else {
        tasks.iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}

/// Runs `method` on every task implied by `pairing`. Task `i` uses the
/// derived seed `derive_seed(seed, i)`.
pub fn run_suite(
    method: Method,
    suite: &TestSuite,
    pairing: &Pairing,
    dynamics: &Dynamics,
    ctx: &MethodContext<'_>,
    seed: u64,
    opts: RunOptions,
) -> Result<BenchReport> {
    dynamics.check_state_dim(suite.dim())?;
    if method == Method::Sp {
        if let Some(m) = ctx.model {
            m.meta().ensure_actions(dynamics.actions())?;
        }
    }
    let tasks = build_tasks(suite, pairing)?;
    let records = map_tasks(&tasks, opts, |i, task| {
        let r = run_method(method, task, dynamics, ctx, derive_seed(seed, i as u64))?;
        Ok(TaskRecord {
            method,
            init_id: task.init_id.clone(),
            target_id: task.target_id.clone(),
            f_max: r.f_max,
            final_fidelity: r.final_fidelity(),
            steps_used: r.steps_used,
            terminated_by: r.terminated_by.name().into(),
            design_time: r.design_time,
        })
    })?;
    let (mean_fidelity, mean_design_time) = means(&records);
    Ok(BenchReport {
        method,
        suite: suite.id.clone(),
        pairing: pairing.name(),
        seed,
        records,
        mean_fidelity,
        mean_design_time,
        environment: Environment::current(opts.workers, opts.timed || opts.workers <= 1),
    })
}

/// Tab-separated per-task table.
pub fn write_records<W: Write>(report: &BenchReport, mut w: W) -> Result<()> {
    writeln!(
        w,
        "method\tinit\ttarget\tf_max\tfinal_fidelity\tsteps_used\tterminated_by\tdesign_time"
    )?;
    for r in &report.records {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.method, r.init_id, r.target_id, r.f_max, r.final_fidelity, r.steps_used, r.terminated_by, r.design_time
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub method: Method,
    pub suite: String,
    pub pairing: String,
    pub tasks: usize,
    pub mean_fidelity: f64,
    pub mean_design_time: f64,
    pub seed: u64,
    pub environment: Environment,
}

impl BenchReport {
    pub fn summary(&self) -> BenchSummary {
        BenchSummary {
            method: self.method,
            suite: self.suite.clone(),
            pairing: self.pairing.clone(),
            tasks: self.records.len(),
            mean_fidelity: self.mean_fidelity,
            mean_design_time: self.mean_design_time,
            seed: self.seed,
            environment: self.environment.clone(),
        }
    }
}

pub fn summary_json(reports: &[BenchReport]) -> Result<String> {
    let summaries: Vec<BenchSummary> = reports.iter().map(BenchReport::summary).collect();
    serde_json::to_string_pretty(&summaries).map_err(|e| Error::Format(e.to_string()))
}

/// One row per method: mean fidelity and mean design time.
pub fn write_comparison<W: Write>(reports: &[BenchReport], mut w: W) -> Result<()> {
    writeln!(w, "method\tsuite\tpairing\ttasks\tmean_fidelity\tmean_design_time")?;
    for r in reports {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.method,
            r.suite,
            r.pairing,
            r.records.len(),
            r.mean_fidelity,
            r.mean_design_time
        )?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    /// Noiseless designs replayed open-loop through the channel.
    IdealPulsesReplayed,
    /// A density-matrix model run closed-loop on the noisy state.
    NoiseTrainedModel,
}

impl SweepMode {
    pub fn name(self) -> &'static str {
        match self {
            SweepMode::IdealPulsesReplayed => "ideal-pulses-replayed",
            SweepMode::NoiseTrainedModel => "noise-trained",
        }
    }
}

impl FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ideal" | "ideal-pulses" | "ideal-pulses-replayed" | "replay" => {
                Ok(SweepMode::IdealPulsesReplayed)
            }
            "noise-trained" | "noise-trained-model" | "trained" => Ok(SweepMode::NoiseTrainedModel),
            other => Err(Error::InvalidParameter(format!(
                "unknown sweep mode '{other}' (valid: ideal, noise-trained)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub p: f64,
    pub mean_fidelity: f64,
    pub mean_final_fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub mode: SweepMode,
    pub channel: ChannelKind,
    pub suite: String,
    pub pairing: String,
    pub tasks: usize,
    pub points: Vec<SweepPoint>,
}

/// Mean SP fidelity under `kind` noise for each `p`.
///
/// In `IdealPulsesReplayed` mode every task is designed once without noise
/// and the same sequence is replayed at each `p`; the model must take pure
/// features. In `NoiseTrainedModel` mode the model must take density
/// features and is run closed-loop at each `p`.
#[allow(clippy::too_many_arguments)]
pub fn noise_sweep(
    mode: SweepMode,
    kind: ChannelKind,
    p_values: &[f64],
    model: &MlpModel,
    suite: &TestSuite,
    pairing: &Pairing,
    dynamics: &Dynamics,
    opts: RunOptions,
) -> Result<SweepReport> {
    dynamics.check_state_dim(suite.dim())?;
    let expected = match mode {
        SweepMode::IdealPulsesReplayed => Encoding::PurePair,
        SweepMode::NoiseTrainedModel => Encoding::DensityPair,
    };
    if model.meta().encoding != expected {
        return Err(Error::Mismatch(format!(
            "{} mode needs a model trained on {} features, got {}",
            mode.name(),
            expected,
            model.meta().encoding
        )));
    }
    let channels: Vec<CompositeChannel> = p_values
        .iter()
        .map(|&p| CompositeChannel::for_qubits(kind, p, dynamics.qubits().count()))
        .collect::<Result<_>>()?;
    let tasks = build_tasks(suite, pairing)?;
    // per_task[i][k]: (F_max, final F) of task i at p_values[k].
    let per_task: Vec<Vec<(f64, f64)>> = map_tasks(&tasks, RunOptions { timed: false, ..opts }, |_, task| {
        let rho = task.init.to_density();
        match mode {
            SweepMode::IdealPulsesReplayed => {
                let ideal = prepare(model, &task.init, &task.target, dynamics)?;
                channels
                    .iter()
                    .map(|ch| {
                        let r = replay_noisy(&ideal, &rho, &task.target, dynamics, ch)?;
                        Ok((r.f_max, r.final_fidelity()))
                    })
                    .collect()
            }
            SweepMode::NoiseTrainedModel => channels
                .iter()
                .map(|ch| {
                    let r = prepare_noisy(model, &rho, &task.target, dynamics, ch)?;
                    Ok((r.f_max, r.final_fidelity()))
                })
                .collect(),
        }
    })?;
    let n = tasks.len() as f64;
    let points = p_values
        .iter()
        .enumerate()
        .map(|(k, &p)| SweepPoint {
            p,
            mean_fidelity: per_task.iter().map(|t| t[k].0).sum::<f64>() / n,
            mean_final_fidelity: per_task.iter().map(|t| t[k].1).sum::<f64>() / n,
        })
        .collect();
    Ok(SweepReport {
        mode,
        channel: kind,
        suite: suite.id.clone(),
        pairing: pairing.name(),
        tasks: tasks.len(),
        points,
    })
}

pub fn write_sweep<W: Write>(report: &SweepReport, mut w: W) -> Result<()> {
    writeln!(w, "# mode={} channel={} suite={} pairing={} tasks={}",
        report.mode.name(), report.channel, report.suite, report.pairing, report.tasks)?;
    writeln!(w, "p\tmean_fidelity\tmean_final_fidelity")?;
    for pt in &report.points {
        writeln!(w, "{}\t{}\t{}", pt.p, pt.mean_fidelity, pt.mean_final_fidelity)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    /// `counts[k]` covers `[k w, (k + 1) w)`; the last bin also holds 1.
    pub counts: Vec<usize>,
}

pub const DEFAULT_BIN_WIDTH: f64 = 0.05;

/// Counts of `F_max` per fidelity bin over `[0, 1]`.
pub fn frequency_histogram(report: &BenchReport, bin_width: f64) -> Result<Histogram> {
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "bin width {bin_width} must lie in (0, 1]"
        )));
    }
    let ratio = 1.0 / bin_width;
    let bins = if (ratio - ratio.round()).abs() < 1e-9 {
        ratio.round() as usize
    } else {
        ratio.ceil() as usize
    };
    let mut counts = vec![0; bins];
    for r in &report.records {
        let f = r.f_max.clamp(0.0, 1.0);
        // A small relative guard keeps values like 0.15 out of the bin below.
        let k = ((f / bin_width) * (1.0 + 1e-12)).floor() as usize;
        counts[k.min(bins - 1)] += 1;
    }
    Ok(Histogram { bin_width, counts })
}

pub fn write_histogram<W: Write>(h: &Histogram, mut w: W) -> Result<()> {
    writeln!(w, "lower\tupper\tcount")?;
    for (k, c) in h.counts.iter().enumerate() {
        let lo = k as f64 * h.bin_width;
        let hi = ((k + 1) as f64 * h.bin_width).min(1.0);
        writeln!(w, "{lo}\t{hi}\t{c}")?;
    }
    Ok(())
}

/// Bloch coordinates after every step of `result`'s pulse sequence; the
/// first row is the initial state. Single-qubit only.
pub fn trajectory_export(
    result: &PrepResult,
    init: &SystemState,
    dynamics: &Dynamics,
    noise: Option<&CompositeChannel>,
) -> Result<Vec<[f64; 3]>> {
    if dynamics.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: dynamics.dim(),
        });
    }
    dynamics.check_state_dim(init.dim())?;
    if let Some(ch) = noise {
        dynamics.check_noise(ch)?;
    }
    let mut rho = init.to_density();
    let mut rows = vec![bloch_from_density(&rho)?];
    for &a in &result.pulse_sequence {
        rho = dynamics.step_density(&rho, a, noise)?;
        rows.push(bloch_from_density(&rho)?);
    }
    Ok(rows)
}

pub fn write_trajectory<W: Write>(rows: &[[f64; 3]], mut w: W) -> Result<()> {
    writeln!(w, "x\ty\tz")?;
    for [x, y, z] in rows {
        writeln!(w, "{x}\t{y}\t{z}")?;
    }
    Ok(())
}
