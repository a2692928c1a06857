// Copyright 2026 The stprep Authors
// SPDX-License-Identifier: Apache-2.0

//! `stprep`: dataset generation, training, evaluation, benchmarks, noise
//! sweeps and trajectory export.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/model mismatch, 3 runtime
//! failure.

mod config;
mod parse;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use stprep::baselines::{crab_prepare, greedy_prepare, grape_prepare, revised_greedy_prepare};
use stprep::bench::{
    frequency_histogram, means, noise_sweep, run_suite, summary_json, trajectory_export, write_comparison,
    write_histogram, write_records, write_sweep, write_trajectory, Method, MethodContext, Pairing,
    RunOptions, SweepMode,
};
use stprep::control::{ActionSet, ControlConfig, Dynamics, Qubits};
use stprep::dataset::{
    bloch_grid_128, generate_dataset, hypersphere_testset_256, load_dataset, save_dataset, DatasetConfig,
    NoiseSpec, TestSuite,
};
use stprep::mlp::{default_layer_sizes, load_model, save_model, train_with, MlpModel, ModelMeta};
use stprep::policy::{prepare, prepare_noisy, replay_noisy, PrepResult};
use stprep::quantum::{ChannelKind, CompositeChannel, PureState, SystemState};
use stprep::rng::{seeded, stage_seed};

use config::{FileConfig, Overrides, RunConfig};
use parse::{parse_state, parse_values};

#[derive(Parser, Debug)]
#[command(name = "stprep", version, about = "Pulse design for singlet-triplet qubits")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for outputs and default inputs.
    #[arg(long, global = true, env = "STPREP_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    /// Global seed; every stage derives its own stream from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of qubits (1 or 2).
    #[arg(long, global = true)]
    qubits: Option<usize>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an oracle-labelled training set.
    GenData(GenDataArgs),
    /// Train a policy network on a dataset.
    Train(TrainArgs),
    /// Design pulses with a trained network for one task or a suite.
    Eval(EvalArgs),
    /// Compare methods on a suite.
    Bench(BenchArgs),
    /// Mean fidelity under a noise channel across noise strengths.
    NoiseSweep(SweepArgs),
    /// Bloch-sphere trajectory of a designed sequence.
    Trajectory(TrajectoryArgs),
}

#[derive(Args, Debug, Serialize)]
struct GenDataArgs {
    #[arg(long)]
    samples: Option<usize>,
    /// Generate noisy data with density-matrix features.
    #[arg(long)]
    noisy: bool,
    #[arg(long)]
    channel: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Also log the mean SP fidelity on the configured suite every epoch.
    #[arg(long)]
    track_sp: bool,
}

#[derive(Args, Debug, Serialize)]
struct SuiteArgs {
    /// bloch128 or hypersphere256.
    #[arg(long)]
    suite: Option<String>,
    /// fixed-initial, all-pairs or random-pairs.
    #[arg(long)]
    pairing: Option<String>,
    /// Number of tasks for random-pairs.
    #[arg(long)]
    pairs: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
struct EvalArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "0")]
    init: String,
    /// Single target state; without it the suite is evaluated.
    #[arg(long)]
    target: Option<String>,
    #[command(flatten)]
    suite: SuiteArgs,
    #[arg(long)]
    channel: Option<String>,
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
struct BenchArgs {
    /// Comma-separated: sp, ga, rg, grape, crab.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "0")]
    init: String,
    #[command(flatten)]
    suite: SuiteArgs,
    #[arg(long)]
    bin_width: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    /// ideal (noiseless model, pulses replayed) or noise-trained.
    #[arg(long, default_value = "ideal")]
    mode: String,
    #[arg(long)]
    channel: String,
    /// START:STOP:STEP, a comma list, or one value.
    #[arg(long, default_value = "0:0.05:0.01")]
    p: String,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "0")]
    init: String,
    /// Single target state; without it the suite is used.
    #[arg(long)]
    target: Option<String>,
    #[command(flatten)]
    suite: SuiteArgs,
}

#[derive(Args, Debug, Serialize)]
struct TrajectoryArgs {
    #[arg(long, default_value = "sp")]
    method: String,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "0")]
    init: String,
    #[arg(long)]
    target: String,
    #[arg(long)]
    channel: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Bad arguments that clap cannot catch.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<Usage>().is_some() || cause.downcast_ref::<toml::de::Error>().is_some() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<stprep::Error>() {
            return match e {
                stprep::Error::Mismatch(_)
                | stprep::Error::DimensionMismatch { .. }
                | stprep::Error::ActionOutOfRange { .. } => 2,
                stprep::Error::InvalidParameter(_) | stprep::Error::InvalidState(_) => 1,
                _ => 3,
            };
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Where outputs go and the digest stamped on each of them.
struct Out {
    dir: PathBuf,
    digest: String,
}

impl Out {
    fn path(&self, given: Option<&Path>, default: &str) -> PathBuf {
        match given {
            Some(p) if p.is_absolute() => p.to_path_buf(),
            Some(p) => self.dir.join(p),
            None => self.dir.join(default),
        }
    }

    fn create(&self, path: &Path) -> anyhow::Result<BufWriter<File>> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(f))
    }

    /// A text table whose first line is the config digest.
    fn text<F>(&self, path: &Path, body: F) -> anyhow::Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> stprep::Result<()>,
    {
        let mut w = self.create(path)?;
        writeln!(w, "# config_digest={}", self.digest)?;
        body(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush()?;
        Ok(())
    }

    fn json(&self, path: &Path, mut value: serde_json::Value) -> anyhow::Result<()> {
        if let Some(obj) = value.as_object_mut() {
            obj.insert("config_digest".into(), json!(self.digest));
        }
        let mut w = self.create(path)?;
        serde_json::to_writer_pretty(&mut w, &value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

struct Session {
    file: FileConfig,
    overrides: Overrides,
    dir: PathBuf,
}

impl Session {
    fn resolve(&self, qubits: Option<Qubits>) -> anyhow::Result<RunConfig> {
        let mut o = self.overrides.clone();
        if let Some(q) = qubits {
            o.qubits = Some(q.count());
        }
        RunConfig::resolve(&self.file, &o)
    }

    fn out(&self, cfg: &RunConfig, command: &str, args: &impl Serialize) -> Out {
        Out {
            dir: self.dir.clone(),
            digest: cfg.digest(command, args),
        }
    }

    /// Loads a model and reconciles its qubit count with `--qubits`.
    fn model(&self, given: Option<&Path>) -> anyhow::Result<MlpModel> {
        let path = match given {
            Some(p) => p.to_path_buf(),
            None => self.dir.join("model.bin"),
        };
        let model = load_model(&path).with_context(|| format!("loading model {}", path.display()))?;
        if let Some(q) = self.overrides.qubits {
            if q != model.meta().qubits.count() {
                bail!(stprep::Error::Mismatch(format!(
                    "--qubits {q} but model {} is for {} qubit(s)",
                    path.display(),
                    model.meta().qubits
                )));
            }
        }
        Ok(model)
    }
}

fn dynamics(cfg: &RunConfig) -> anyhow::Result<Dynamics> {
    let control = ControlConfig {
        fidelity_threshold: cfg.fidelity_threshold,
        ..ControlConfig::for_qubits(cfg.qubits)
    };
    Ok(Dynamics::new(control, ActionSet::for_qubits(cfg.qubits))?)
}

fn suite(name: &str, cfg: &RunConfig) -> anyhow::Result<TestSuite> {
    let s = match name {
        "bloch128" => bloch_grid_128(),
        "hypersphere256" => hypersphere_testset_256(stage_seed(cfg.seed, "suite")),
        other => bail!(Usage(format!(
            "unknown suite '{other}' (valid: bloch128, hypersphere256)"
        ))),
    };
    if s.dim() != cfg.qubits.dim() {
        bail!(stprep::Error::Mismatch(format!(
            "suite {name} holds {}-dimensional states, the run is for {} qubit(s)",
            s.dim(),
            cfg.qubits
        )));
    }
    Ok(s)
}

fn pairing(name: &str, init: &str, cfg: &RunConfig) -> anyhow::Result<Pairing> {
    Ok(match name {
        "fixed-initial" => Pairing::FixedInitial {
            state: parse_state(init, cfg.qubits.dim())?,
            id: init.to_string(),
        },
        "all-pairs" | "all-ordered-pairs" => Pairing::AllOrderedPairs,
        "random-pairs" => Pairing::RandomPairs {
            count: cfg.pairs,
            seed: stage_seed(cfg.seed, "pairs"),
        },
        other => bail!(Usage(format!(
            "unknown pairing '{other}' (valid: fixed-initial, all-pairs, random-pairs)"
        ))),
    })
}

fn noise_arg(channel: Option<&str>, p: Option<f64>) -> anyhow::Result<Option<NoiseSpec>> {
    match (channel, p) {
        (None, None) => Ok(None),
        (Some(c), Some(p)) => {
            let spec = NoiseSpec { kind: c.parse()?, p };
            stprep::quantum::make_channel(spec.kind, p)?;
            Ok(Some(spec))
        }
        _ => bail!(Usage("--channel and --p go together".into())),
    }
}

fn parse_methods(list: &[String]) -> anyhow::Result<Vec<Method>> {
    list.iter()
        .map(|m| m.parse::<Method>().map_err(|e| anyhow::Error::new(Usage(e.to_string()))))
        .collect()
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let dir = cli
        .output_dir
        .clone()
        .or(file.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let overrides = Overrides {
        seed: cli.seed,
        qubits: cli.qubits,
        workers: cli.workers,
        ..Overrides::default()
    };
    let mut session = Session { file, overrides, dir };
    match cli.command {
        Command::GenData(a) => gen_data(&mut session, a),
        Command::Train(a) => train(&mut session, a),
        Command::Eval(a) => eval(&mut session, a),
        Command::Bench(a) => bench(&mut session, a),
        Command::NoiseSweep(a) => sweep(&mut session, a),
        Command::Trajectory(a) => trajectory(&mut session, a),
    }
}

fn gen_data(s: &mut Session, a: GenDataArgs) -> anyhow::Result<()> {
    s.overrides.samples = a.samples;
    let noise = if a.noisy || a.channel.is_some() || a.p.is_some() {
        Some(noise_arg(Some(a.channel.as_deref().unwrap_or("bitflip")), Some(a.p.unwrap_or(0.005)))?.unwrap())
    } else {
        None
    };
    s.overrides.noise = noise;
    let cfg = s.resolve(None)?;
    let out = s.out(&cfg, "gen-data", &a);
    let dyn_ = dynamics(&cfg)?;
    let dcfg = DatasetConfig {
        noise: cfg.noise,
        rollout_cap: cfg.rollout_cap,
        workers: cfg.workers,
        ..DatasetConfig::new(cfg.qubits, cfg.samples, cfg.seed)
    };
    let mut data = generate_dataset(&dcfg, &dyn_)?;
    data.header.tag = Some(out.digest.clone());
    let path = out.path(a.out.as_deref(), "dataset.bin");
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    save_dataset(&data, &path).with_context(|| format!("writing {}", path.display()))?;
    let sidecar = PathBuf::from(format!("{}.summary.json", path.display()));
    out.json(
        &sidecar,
        json!({
            "samples": data.len(),
            "qubits": cfg.qubits.count(),
            "seed": cfg.seed,
            "encoding": data.header.encoding.name(),
            "noise": NoiseSpec::to_field(cfg.noise.as_ref()),
            "label_histogram": data.label_histogram(),
        }),
    )?;
    println!("wrote {} samples to {}", data.len(), path.display());
    Ok(())
}

fn train(s: &mut Session, a: TrainArgs) -> anyhow::Result<()> {
    let data_path = a.data.clone().unwrap_or_else(|| s.dir.join("dataset.bin"));
    let data = load_dataset(&data_path).with_context(|| format!("loading dataset {}", data_path.display()))?;
    if let Some(q) = s.overrides.qubits {
        if q != data.header.qubits.count() {
            bail!(stprep::Error::Mismatch(format!(
                "--qubits {q} but dataset {} holds {}-qubit samples",
                data_path.display(),
                data.header.qubits
            )));
        }
    }
    s.overrides.epochs = a.epochs;
    s.overrides.batch_size = a.batch_size;
    s.overrides.learning_rate = a.lr;
    let cfg = s.resolve(Some(data.header.qubits))?;
    let out = s.out(&cfg, "train", &a);
    let dyn_ = dynamics(&cfg)?;
    if dyn_.actions().id() != data.header.action_set {
        bail!(stprep::Error::Mismatch(format!(
            "dataset action set {} differs from {}",
            data.header.action_set,
            dyn_.actions().id()
        )));
    }
    let mut meta = ModelMeta::for_dataset(&data.header, cfg.seed);
    meta.tag = Some(out.digest.clone());
    let sizes = default_layer_sizes(data.header.qubits, data.header.encoding);
    let mut model = MlpModel::init(&sizes, stage_seed(cfg.seed, "init"), meta)?;

    let tracking = if a.track_sp {
        let su = suite(&cfg.suite, &cfg)?;
        let pa = pairing(&cfg.pairing, "0", &cfg)?;
        Some((su, pa))
    } else {
        None
    };
    let mut sp_curve = Vec::new();
    let mut failure = None;
    let report = train_with(&mut model, &data, &cfg.train, |stats, m| {
        if let Some((su, pa)) = &tracking {
            let ctx = MethodContext {
                model: Some(m),
                ..MethodContext::default()
            };
            let opts = RunOptions {
                workers: cfg.workers,
                timed: false,
            };
            match run_suite(Method::Sp, su, pa, &dyn_, &ctx, 0, opts) {
                Ok(r) => sp_curve.push(r.mean_fidelity),
                Err(e) => failure = Some(e),
            }
        }
        eprintln!(
            "epoch {:>4}  loss {:.5}  accuracy {:.4}{}",
            stats.epoch,
            stats.loss,
            stats.heldout_accuracy,
            sp_curve.last().map(|f| format!("  sp {f:.4}")).unwrap_or_default()
        );
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let model_path = out.path(a.out.as_deref(), "model.bin");
    if let Some(parent) = model_path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    save_model(&model, &model_path).with_context(|| format!("writing {}", model_path.display()))?;
    out.text(&out.path(None, "train_report.tsv"), |w| {
        write!(w, "epoch\tloss\theldout_accuracy")?;
        if a.track_sp {
            write!(w, "\tsp_mean_fidelity")?;
        }
        writeln!(w)?;
        for (i, (l, acc)) in report.loss.iter().zip(&report.heldout_accuracy).enumerate() {
            write!(w, "{}\t{l}\t{acc}", i + 1)?;
            if let Some(f) = sp_curve.get(i) {
                write!(w, "\t{f}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    out.json(
        &out.path(None, "train_summary.json"),
        json!({
            "qubits": cfg.qubits.count(),
            "layers": sizes,
            "epochs": cfg.train.epochs,
            "batch_size": cfg.train.batch_size,
            "learning_rate": cfg.train.learning_rate,
            "validation_fraction": cfg.train.validation_fraction,
            "seed": cfg.seed,
            "train_samples": report.train_samples,
            "heldout_samples": report.heldout_samples,
            "final_loss": report.loss.last(),
            "final_heldout_accuracy": report.heldout_accuracy.last(),
            "wall_time_secs": report.wall_time_secs,
        }),
    )?;
    println!(
        "trained {} epochs on {} samples in {:.1}s; held-out accuracy {:.4}; model at {}",
        report.loss.len(),
        report.train_samples,
        report.wall_time_secs,
        report.heldout_accuracy.last().copied().unwrap_or(f64::NAN),
        model_path.display()
    );
    Ok(())
}

/// Designs one task with any method, noisy when `noise` is given.
fn design(
    method: Method,
    model: Option<&MlpModel>,
    init: &PureState,
    target: &PureState,
    dyn_: &Dynamics,
    cfg: &RunConfig,
    noise: Option<&CompositeChannel>,
) -> anyhow::Result<PrepResult> {
    if method == Method::Sp {
        let m = model.ok_or_else(|| Usage("method sp needs --model".into()))?;
        return Ok(match noise {
            Some(ch) => prepare_noisy(m, &init.to_density(), target, dyn_, ch)?,
            None => prepare(m, init, target, dyn_)?,
        });
    }
    let ideal = match method {
        Method::Ga => greedy_prepare(init, target, dyn_)?,
        Method::Rg => revised_greedy_prepare(init, target, dyn_, &mut seeded(stage_seed(cfg.seed, "rg")))?,
        Method::Grape => grape_prepare(init, target, dyn_, &cfg.grape)?,
        Method::Crab => crab_prepare(init, target, dyn_, &cfg.crab)?,
        Method::Sp => unreachable!(),
    };
    Ok(match noise {
        Some(ch) => replay_noisy(&ideal, &init.to_density(), target, dyn_, ch)?,
        None => ideal,
    })
}

fn channel_for(noise: Option<NoiseSpec>, cfg: &RunConfig) -> anyhow::Result<Option<CompositeChannel>> {
    Ok(noise.map(|n| n.channel(cfg.qubits)).transpose()?)
}

/// Writes the step record and, for one qubit, the trajectory of a task.
#[allow(clippy::too_many_arguments)]
fn write_task(
    out: &Out,
    r: &PrepResult,
    init: &PureState,
    target: &PureState,
    dyn_: &Dynamics,
    noise: Option<&CompositeChannel>,
    record: &str,
    traj: Option<PathBuf>,
) -> anyhow::Result<()> {
    let start = SystemState::Pure(init.clone());
    out.text(&out.path(None, record), |w| r.write_record(w, dyn_, &start, target))?;
    if dyn_.dim() == 2 {
        let rows = trajectory_export(r, &start, dyn_, noise)?;
        let path = traj.unwrap_or_else(|| out.path(None, "trajectory.tsv"));
        out.text(&path, |w| write_trajectory(&rows, w))?;
    }
    Ok(())
}

fn eval(s: &mut Session, a: EvalArgs) -> anyhow::Result<()> {
    let model = s.model(a.model.as_deref())?;
    s.overrides.suite = a.suite.suite.clone();
    s.overrides.pairing = a.suite.pairing.clone();
    s.overrides.pairs = a.suite.pairs;
    let cfg = s.resolve(Some(model.meta().qubits))?;
    let out = s.out(&cfg, "eval", &a);
    let dyn_ = dynamics(&cfg)?;
    let noise = channel_for(noise_arg(a.channel.as_deref(), a.p)?, &cfg)?;
    if let Some(t) = &a.target {
        let init = parse_state(&a.init, cfg.qubits.dim())?;
        let target = parse_state(t, cfg.qubits.dim())?;
        let r = design(Method::Sp, Some(&model), &init, &target, &dyn_, &cfg, noise.as_ref())?;
        write_task(&out, &r, &init, &target, &dyn_, noise.as_ref(), "prep.tsv", None)?;
        println!(
            "final fidelity {:.6}  f_max {:.6}  steps {}  ({})",
            r.final_fidelity(),
            r.f_max,
            r.steps_used,
            r.terminated_by.name()
        );
        return Ok(());
    }
    if noise.is_some() {
        bail!(Usage("noisy evaluation needs a single --target; use noise-sweep for suites".into()));
    }
    let su = suite(&cfg.suite, &cfg)?;
    let pa = pairing(&cfg.pairing, &a.init, &cfg)?;
    let ctx = MethodContext {
        model: Some(&model),
        ..MethodContext::default()
    };
    let opts = RunOptions {
        workers: cfg.workers,
        timed: true,
    };
    let report = run_suite(Method::Sp, &su, &pa, &dyn_, &ctx, 0, opts)?;
    out.text(&out.path(None, "eval_records.tsv"), |w| write_records(&report, w))?;
    out.json(
        &out.path(None, "eval_summary.json"),
        serde_json::to_value(report.summary())?,
    )?;
    println!(
        "{} tasks  mean fidelity {:.4}  mean design time {:.3e}s",
        report.records.len(),
        report.mean_fidelity,
        report.mean_design_time
    );
    Ok(())
}

fn bench(s: &mut Session, a: BenchArgs) -> anyhow::Result<()> {
    let names: Option<Vec<String>> = a
        .methods
        .as_ref()
        .map(|m| m.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect());
    if let Some(n) = &names {
        parse_methods(n)?;
    }
    let wants_sp = names
        .as_ref()
        .is_none_or(|n| n.iter().any(|m| m.eq_ignore_ascii_case("sp")));
    let model = if wants_sp || a.model.is_some() {
        Some(s.model(a.model.as_deref())?)
    } else {
        None
    };
    s.overrides.methods = names;
    s.overrides.suite = a.suite.suite.clone();
    s.overrides.pairing = a.suite.pairing.clone();
    s.overrides.pairs = a.suite.pairs;
    s.overrides.bin_width = a.bin_width;
    let cfg = s.resolve(model.as_ref().map(|m| m.meta().qubits))?;
    let methods = parse_methods(&cfg.methods)?;
    if methods.contains(&Method::Sp) && model.is_none() {
        bail!(Usage("method sp needs --model".into()));
    }
    let out = s.out(&cfg, "bench", &a);
    let dyn_ = dynamics(&cfg)?;
    let su = suite(&cfg.suite, &cfg)?;
    let pa = pairing(&cfg.pairing, &a.init, &cfg)?;
    let ctx = MethodContext {
        model: model.as_ref(),
        grape: cfg.grape.clone(),
        crab: cfg.crab.clone(),
    };
    let opts = RunOptions {
        workers: cfg.workers,
        timed: true,
    };
    let mut reports = Vec::new();
    for m in methods {
        let r = run_suite(m, &su, &pa, &dyn_, &ctx, stage_seed(cfg.seed, m.name()), opts)?;
        out.text(&out.path(None, &format!("bench_{m}.tsv")), |w| write_records(&r, w))?;
        let h = frequency_histogram(&r, cfg.bin_width)?;
        out.text(&out.path(None, &format!("hist_{m}.tsv")), |w| write_histogram(&h, w))?;
        let (f, t) = means(&r.records);
        eprintln!("{m:>6}: mean fidelity {f:.4}  mean design time {t:.3e}s");
        reports.push(r);
    }
    out.text(&out.path(None, "bench_summary.tsv"), |w| write_comparison(&reports, w))?;
    let summaries: serde_json::Value = serde_json::from_str(&summary_json(&reports)?)?;
    out.json(&out.path(None, "bench_summary.json"), json!({ "reports": summaries }))?;
    write_comparison(&reports, std::io::stdout().lock())?;
    Ok(())
}

fn sweep(s: &mut Session, a: SweepArgs) -> anyhow::Result<()> {
    let mode: SweepMode = a.mode.parse()?;
    let kind: ChannelKind = a.channel.parse()?;
    let ps = parse_values(&a.p)?;
    let model = s.model(a.model.as_deref())?;
    s.overrides.suite = a.suite.suite.clone();
    s.overrides.pairing = a.suite.pairing.clone();
    s.overrides.pairs = a.suite.pairs;
    let cfg = s.resolve(Some(model.meta().qubits))?;
    let out = s.out(&cfg, "noise-sweep", &a);
    let dyn_ = dynamics(&cfg)?;
    let (su, pa) = match &a.target {
        Some(t) => (
            TestSuite {
                id: "task".into(),
                description: format!("single target {t}"),
                seed: None,
                states: vec![parse_state(t, cfg.qubits.dim())?],
            },
            Pairing::FixedInitial {
                state: parse_state(&a.init, cfg.qubits.dim())?,
                id: a.init.clone(),
            },
        ),
        None => (suite(&cfg.suite, &cfg)?, pairing(&cfg.pairing, &a.init, &cfg)?),
    };
    let opts = RunOptions {
        workers: cfg.workers,
        timed: false,
    };
    let report = noise_sweep(mode, kind, &ps, &model, &su, &pa, &dyn_, opts)?;
    let path = out.path(None, &format!("sweep_{}_{}.tsv", mode.name(), kind.name()));
    out.text(&path, |w| write_sweep(&report, w))?;
    write_sweep(&report, std::io::stdout().lock())?;
    Ok(())
}

fn trajectory(s: &mut Session, a: TrajectoryArgs) -> anyhow::Result<()> {
    let method: Method = a.method.parse().map_err(|e: stprep::Error| Usage(e.to_string()))?;
    let model = if method == Method::Sp || a.model.is_some() {
        Some(s.model(a.model.as_deref())?)
    } else {
        None
    };
    let cfg = s.resolve(model.as_ref().map(|m| m.meta().qubits))?;
    if cfg.qubits != Qubits::One {
        bail!(stprep::Error::Mismatch("Bloch trajectories need a single qubit".into()));
    }
    let out = s.out(&cfg, "trajectory", &a);
    let dyn_ = dynamics(&cfg)?;
    let noise = channel_for(noise_arg(a.channel.as_deref(), a.p)?, &cfg)?;
    let init = parse_state(&a.init, 2)?;
    let target = parse_state(&a.target, 2)?;
    let r = design(method, model.as_ref(), &init, &target, &dyn_, &cfg, noise.as_ref())?;
    let traj = out.path(a.out.as_deref(), "trajectory.tsv");
    write_task(&out, &r, &init, &target, &dyn_, noise.as_ref(), "trajectory_steps.tsv", Some(traj.clone()))?;
    println!(
        "final fidelity {:.6}  f_max {:.6}  steps {}; trajectory at {}",
        r.final_fidelity(),
        r.f_max,
        r.steps_used,
        traj.display()
    );
    Ok(())
}
