// Copyright 2026 The stprep Authors
// SPDX-License-Identifier: Apache-2.0

//! Invariant checks shared by the property tests and the acceptance run.
//!
//! The reference physics here is written out by hand (Pauli matrices,
//! Kronecker products, a scaled-and-squared Taylor exponential) so that it
//! does not lean on the code under test.

#![allow(dead_code)]

use rand::Rng;
use stprep::control::{Dynamics, Qubits};
use stprep::dataset::{
    decode_pure_pair, generate_dataset, sample_haar_state, DatasetConfig, Encoding,
};
use stprep::mlp::{default_layer_sizes, MlpModel, ModelMeta};
use stprep::policy::{prepare, prepare_noisy, Termination};
use stprep::quantum::{
    apply_channel, fidelity, fidelity_mixed, lift_channel_two_qubit, make_channel, propagator,
    ChannelKind, CMatrix, CompositeChannel, DensityMatrix, HermitianOperator, PureState, C64,
};
use stprep::rng::seeded;

pub type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn mat(d: usize, entries: &[C64]) -> CMatrix {
    CMatrix::from_row_slice(d, d, entries)
}

pub fn ref_x() -> CMatrix {
    mat(2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn ref_z() -> CMatrix {
    mat(2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

pub fn ref_id(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| if i == j { c(1., 0.) } else { c(0., 0.) })
}

pub fn ref_kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// exp(-i H t) by a 30-term Taylor series after scaling by 2^s, then
/// squaring s times.
pub fn taylor_propagator(h: &CMatrix, t: f64) -> CMatrix {
    let d = h.nrows();
    let a = h * c(0.0, -t);
    let norm: f64 = a.iter().map(|z| z.norm()).sum();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let a = a * c(0.5f64.powi(s), 0.0);
    let mut term = ref_id(d);
    let mut sum = ref_id(d);
    for k in 1..=30 {
        term = &term * &a * c(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// J sz + h sx.
pub fn ref_single_hamiltonian(j: f64, h: f64) -> CMatrix {
    ref_z() * c(j, 0.) + ref_x() * c(h, 0.)
}

/// Half of J1 ZI + J2 IZ + XI + IX + (J12/2)(Z-I)(Z-I) with J12 = J1 J2 / 2.
pub fn ref_two_hamiltonian(j1: f64, j2: f64) -> CMatrix {
    let i2 = ref_id(2);
    let zm = ref_z() - &i2;
    let j12 = j1 * j2 / 2.0;
    let sum = ref_kron(&ref_z(), &i2) * c(j1, 0.)
        + ref_kron(&i2, &ref_z()) * c(j2, 0.)
        + ref_kron(&ref_x(), &i2)
        + ref_kron(&i2, &ref_x())
        + ref_kron(&zm, &zm) * c(j12 / 2.0, 0.);
    sum * c(0.5, 0.)
}

/// Reference Hamiltonian of action `a` under the standard action sets.
pub fn ref_action_hamiltonian(qubits: Qubits, a: usize) -> CMatrix {
    match qubits {
        Qubits::One => ref_single_hamiltonian(a as f64, 1.0),
        Qubits::Two => ref_two_hamiltonian((a / 4 + 1) as f64, (a % 4 + 1) as f64),
    }
}

pub fn random_hermitian<R: Rng>(d: usize, max_norm: f64, rng: &mut R) -> CMatrix {
    let a = CMatrix::from_fn(d, d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let h = (&a + a.adjoint()) * c(0.5, 0.);
    let fro = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let scale = rng.random_range(0.0..=max_norm) / fro.max(1e-12);
    h * c(scale, 0.)
}

pub fn random_density<R: Rng>(d: usize, rng: &mut R) -> DensityMatrix {
    let a = CMatrix::from_fn(d, d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let m = &a * a.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr).expect("positive by construction")
}

fn ref_fidelity(psi: &[C64], target: &PureState) -> f64 {
    psi.iter()
        .zip(target.amplitudes())
        .map(|(a, t)| t.conj() * a)
        .sum::<C64>()
        .norm_sqr()
}

fn ref_apply(u: &CMatrix, s: &PureState) -> Vec<C64> {
    (0..u.nrows())
        .map(|i| (0..u.ncols()).map(|j| u[(i, j)] * s.amplitudes()[j]).sum())
        .collect()
}

/// U U^dagger = I for `count` random Hermitian operators and step lengths.
pub fn check_unitarity(count: usize, seed: u64) -> Check {
    let mut rng = seeded(seed);
    for k in 0..count {
        let d = if k % 2 == 0 { 2 } else { 4 };
        let h = random_hermitian(d, 10.0, &mut rng);
        let dt = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
        let u = propagator(&HermitianOperator::new(h).map_err(|e| e.to_string())?, dt)
            .map_err(|e| e.to_string())?;
        let err = max_diff(&(&u * u.adjoint()), &ref_id(d));
        ensure(err < 1e-10, || format!("unitarity error {err:e} at case {k}"))?;
    }
    Ok(())
}

/// Eigendecomposition propagator against the Taylor reference, on random
/// operators and on every allowed action.
pub fn check_propagator_oracle(count: usize, seed: u64) -> Check {
    let mut rng = seeded(seed);
    for k in 0..count {
        let d = if k % 2 == 0 { 2 } else { 4 };
        let h = random_hermitian(d, 10.0, &mut rng);
        let dt = rng.random_range(0.0..=std::f64::consts::FRAC_PI_2);
        let u = propagator(&HermitianOperator::new(h.clone()).map_err(|e| e.to_string())?, dt)
            .map_err(|e| e.to_string())?;
        let err = max_diff(&u, &taylor_propagator(&h, dt));
        ensure(err < 1e-8, || format!("propagator differs from Taylor by {err:e} at case {k}"))?;
    }
    for qubits in [Qubits::One, Qubits::Two] {
        let dyn_ = Dynamics::standard(qubits);
        for a in 0..dyn_.action_count() {
            let reference = taylor_propagator(&ref_action_hamiltonian(qubits, a), dyn_.config().dt);
            let err = max_diff(dyn_.propagator(a).map_err(|e| e.to_string())?, &reference);
            ensure(err < 1e-8, || format!("{qubits} action {a}: step propagator off by {err:e}"))?;
        }
    }
    Ok(())
}

/// Pure evolution keeps unit norm; channels keep unit trace, Hermiticity
/// and positivity.
pub fn check_norm_and_trace(count: usize, seed: u64) -> Check {
    let mut rng = seeded(seed);
    for k in 0..count {
        let d = if k % 2 == 0 { 2 } else { 4 };
        let s = sample_haar_state(d, &mut rng).map_err(|e| e.to_string())?;
        let h = random_hermitian(d, 10.0, &mut rng);
        let dt = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
        let u = propagator(&HermitianOperator::new(h).map_err(|e| e.to_string())?, dt)
            .map_err(|e| e.to_string())?;
        let out = ref_apply(&u, &s);
        let norm = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        ensure((norm - 1.0).abs() < 1e-10, || format!("norm {norm} after evolution, case {k}"))?;
    }
    for kind in ChannelKind::ALL {
        for k in 0..count / 10 {
            let p = rng.random_range(0.0..=1.0);
            let qubits = 1 + k % 2;
            let ch = CompositeChannel::for_qubits(kind, p, qubits).map_err(|e| e.to_string())?;
            let mut rho = random_density(1 << qubits, &mut rng);
            for _ in 0..20 {
                rho = ch.apply(&rho).map_err(|e| e.to_string())?;
            }
            let tr = rho.trace();
            ensure((tr.re - 1.0).abs() < 1e-10 && tr.im.abs() < 1e-10, || {
                format!("{kind} p={p}: trace {tr} after 20 applications")
            })?;
            ensure(rho.hermiticity_error() < 1e-10, || format!("{kind} p={p}: lost Hermiticity"))?;
            let min = rho.min_eigenvalue();
            ensure(min >= -1e-9, || format!("{kind} p={p}: eigenvalue {min:e}"))?;
        }
    }
    Ok(())
}

/// Sum of E^dagger E is the identity for every channel and p on a grid.
pub fn check_kraus_completeness() -> Check {
    for kind in ChannelKind::ALL {
        for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let ch = make_channel(kind, p).map_err(|e| e.to_string())?;
            let sum = ch
                .operators()
                .iter()
                .fold(CMatrix::zeros(2, 2), |acc, e| acc + e.adjoint() * e);
            let err = max_diff(&sum, &ref_id(2));
            ensure(err < 1e-10, || format!("{kind} p={p}: completeness error {err:e}"))?;
        }
    }
    Ok(())
}

/// The two-qubit lift equals (E (x) I) then (I (x) E), and the two halves
/// commute.
pub fn check_two_qubit_lift(seed: u64) -> Check {
    let mut rng = seeded(seed);
    for kind in ChannelKind::ALL {
        let p = rng.random_range(0.0..=1.0);
        let single = make_channel(kind, p).map_err(|e| e.to_string())?;
        let lifted = lift_channel_two_qubit(&single);
        let rho = random_density(4, &mut rng);
        let apply_ops = |m: &CMatrix, ops: &[CMatrix]| {
            ops.iter().fold(CMatrix::zeros(4, 4), |acc, e| acc + e * m * e.adjoint())
        };
        let first: Vec<CMatrix> = single.operators().iter().map(|e| ref_kron(e, &ref_id(2))).collect();
        let second: Vec<CMatrix> = single.operators().iter().map(|e| ref_kron(&ref_id(2), e)).collect();
        let a = apply_ops(&apply_ops(rho.matrix(), &first), &second);
        let b = apply_ops(&apply_ops(rho.matrix(), &second), &first);
        let got = lifted.apply(&rho).map_err(|e| e.to_string())?;
        let err = max_diff(got.matrix(), &a);
        ensure(err < 1e-12, || format!("{kind}: lift differs from reference by {err:e}"))?;
        ensure(max_diff(&a, &b) < 1e-12, || format!("{kind}: qubit channels do not commute"))?;
    }
    Ok(())
}

/// fidelity_mixed on |s><s| equals the pure fidelity.
pub fn check_rank_one_fidelity(count: usize, seed: u64) -> Check {
    let mut rng = seeded(seed);
    for k in 0..count {
        let d = if k % 2 == 0 { 2 } else { 4 };
        let s = sample_haar_state(d, &mut rng).map_err(|e| e.to_string())?;
        let t = sample_haar_state(d, &mut rng).map_err(|e| e.to_string())?;
        let a = fidelity(&s, &t).map_err(|e| e.to_string())?;
        let b = fidelity_mixed(&s.to_density(), &t).map_err(|e| e.to_string())?;
        ensure((a - b).abs() < 1e-10, || format!("rank-1 fidelity {b} vs pure {a}"))?;
        let r = ref_fidelity(s.amplitudes(), &t);
        ensure((a - r).abs() < 1e-12, || format!("fidelity {a} vs reference {r}"))?;
    }
    apply_channel(
        &PureState::basis(2, 0).unwrap().to_density(),
        &make_channel(ChannelKind::BitFlip, 0.0).unwrap(),
    )
    .map(|_| ())
    .map_err(|e| e.to_string())
}

fn inner(a: &stprep::mlp::Gradients, b: &stprep::mlp::Gradients) -> f64 {
    a.layers
        .iter()
        .zip(&b.layers)
        .map(|(x, y)| (&x.weights * &y.weights).sum() + (&x.bias * &y.bias).sum())
        .sum()
}

/// Analytic cross-entropy gradients against central differences along
/// random directions, on a model with three weight layers.
pub fn check_mlp_gradient(directions: usize, seed: u64) -> Check {
    let meta = ModelMeta::new(
        Qubits::One,
        &stprep::control::ActionSet::single_qubit(),
        Encoding::PurePair,
        seed,
    );
    let model = MlpModel::init(&[8, 6, 5, 8], seed, meta).map_err(|e| e.to_string())?;
    let mut rng = seeded(seed ^ 0x5eed);
    let x = ndarray::Array2::from_shape_fn((6, 8), |_| rng.random_range(-1.0..1.0));
    let labels: Vec<usize> = (0..6).map(|_| rng.random_range(0..8)).collect();
    let (_, grads) = model.loss_and_gradients(x.view(), &labels).map_err(|e| e.to_string())?;
    let eps = 1e-5;
    for k in 0..directions {
        let mut dir = grads.clone();
        for l in &mut dir.layers {
            l.weights.mapv_inplace(|_| rng.random_range(-1.0..1.0));
            l.bias.mapv_inplace(|_| rng.random_range(-1.0..1.0));
        }
        let analytic = inner(&grads, &dir);
        let loss_at = |s: f64| {
            let mut m = model.clone();
            m.perturb(&dir, s);
            m.loss_and_gradients(x.view(), &labels).map(|r| r.0)
        };
        let numeric = (loss_at(eps).map_err(|e| e.to_string())? - loss_at(-eps).map_err(|e| e.to_string())?)
            / (2.0 * eps);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
        ensure(rel < 1e-5, || {
            format!("direction {k}: analytic {analytic:e} vs numeric {numeric:e} (rel {rel:e})")
        })?;
    }
    Ok(())
}

/// Every stored sample strictly improves, and on `checked` samples no action
/// beats the label under the reference propagators.
pub fn check_dataset_oracle(qubits: Qubits, samples: usize, checked: usize, seed: u64) -> Check {
    let dyn_ = Dynamics::standard(qubits);
    let data = generate_dataset(&DatasetConfig::new(qubits, samples, seed), &dyn_)
        .map_err(|e| e.to_string())?;
    ensure(data.len() == samples, || format!("{} samples, wanted {samples}", data.len()))?;
    for (i, s) in data.samples.iter().enumerate() {
        ensure(s.fidelity_after > s.fidelity_before, || {
            format!("sample {i}: {} does not improve on {}", s.fidelity_after, s.fidelity_before)
        })?;
    }
    let props: Vec<CMatrix> = (0..dyn_.action_count())
        .map(|a| taylor_propagator(&ref_action_hamiltonian(qubits, a), dyn_.config().dt))
        .collect();
    let step = samples.max(1) / checked.max(1);
    for i in (0..samples).step_by(step.max(1)).take(checked) {
        let s = &data.samples[i];
        let (cur, tar) = decode_pure_pair(&s.features).map_err(|e| e.to_string())?;
        let before = ref_fidelity(cur.amplitudes(), &tar);
        ensure((before - s.fidelity_before).abs() < 1e-9, || {
            format!("sample {i}: stored F {} vs recomputed {before}", s.fidelity_before)
        })?;
        let next: Vec<f64> = props.iter().map(|u| ref_fidelity(&ref_apply(u, &cur), &tar)).collect();
        let best = next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ensure((next[s.label] - s.fidelity_after).abs() < 1e-9, || {
            format!("sample {i}: label {} gives {} not {}", s.label, next[s.label], s.fidelity_after)
        })?;
        ensure(next[s.label] >= best - 1e-9, || {
            format!("sample {i}: label {} gives {} but best is {best}", s.label, next[s.label])
        })?;
    }
    Ok(())
}

/// An untrained network of the default shape, enough to drive the loop.
pub fn untrained_model(qubits: Qubits, encoding: Encoding, seed: u64) -> MlpModel {
    let meta = ModelMeta::new(qubits, &stprep::control::ActionSet::for_qubits(qubits), encoding, seed);
    MlpModel::init(&default_layer_sizes(qubits, encoding), seed, meta).expect("valid sizes")
}

/// A zero-strength channel reproduces the noiseless design, for both
/// feature encodings.
pub fn check_zero_noise_consistency(tasks: usize, seed: u64) -> Check {
    let mut rng = seeded(seed);
    for k in 0..tasks {
        let qubits = if k % 2 == 0 { Qubits::One } else { Qubits::Two };
        let dyn_ = Dynamics::standard(qubits);
        let kind = ChannelKind::ALL[k % 3];
        let ch = CompositeChannel::for_qubits(kind, 0.0, qubits.count()).map_err(|e| e.to_string())?;
        let init = sample_haar_state(qubits.dim(), &mut rng).map_err(|e| e.to_string())?;
        let target = sample_haar_state(qubits.dim(), &mut rng).map_err(|e| e.to_string())?;
        for encoding in [Encoding::PurePair, Encoding::DensityPair] {
            let model = untrained_model(qubits, encoding, seed.wrapping_add(k as u64));
            let a = prepare(&model, &init, &target, &dyn_).map_err(|e| e.to_string())?;
            let b = prepare_noisy(&model, &init.to_density(), &target, &dyn_, &ch)
                .map_err(|e| e.to_string())?;
            ensure(a.pulse_sequence == b.pulse_sequence, || {
                format!("task {k} {encoding}: p=0 changed the sequence")
            })?;
            let err = a
                .fidelity_trace
                .iter()
                .zip(&b.fidelity_trace)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            ensure(err < 1e-9, || format!("task {k} {encoding}: p=0 trace differs by {err:e}"))?;
        }
    }
    Ok(())
}

/// Loop bounds: at most N actions, F_max is the trace maximum, a threshold
/// exit really crossed the threshold, and a step-cap exit used all N steps.
pub fn check_loop_bounds(tasks: usize, seed: u64) -> Check {
    let mut rng = seeded(seed);
    for k in 0..tasks {
        let qubits = if k % 2 == 0 { Qubits::One } else { Qubits::Two };
        let dyn_ = Dynamics::standard(qubits);
        let cfg = dyn_.config();
        let model = untrained_model(qubits, Encoding::PurePair, seed.wrapping_add(k as u64));
        let init = sample_haar_state(qubits.dim(), &mut rng).map_err(|e| e.to_string())?;
        let target = if k % 5 == 0 {
            init.clone()
        } else {
            sample_haar_state(qubits.dim(), &mut rng).map_err(|e| e.to_string())?
        };
        let r = prepare(&model, &init, &target, &dyn_).map_err(|e| e.to_string())?;
        let max = r.fidelity_trace.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ensure(r.steps_used <= cfg.max_steps, || format!("task {k}: {} steps", r.steps_used))?;
        ensure(r.fidelity_trace.len() == r.steps_used + 1, || format!("task {k}: trace length"))?;
        ensure(r.f_max == max, || format!("task {k}: F_max {} vs trace max {max}", r.f_max))?;
        ensure((0.0..=1.0 + 1e-12).contains(&r.f_max), || format!("task {k}: F_max {}", r.f_max))?;
        match r.terminated_by {
            Termination::Threshold => ensure(r.f_max > cfg.fidelity_threshold, || {
                format!("task {k}: threshold exit at {}", r.f_max)
            })?,
            Termination::StepCap => ensure(r.steps_used == cfg.max_steps, || {
                format!("task {k}: step-cap exit after {} steps", r.steps_used)
            })?,
            other => return Err(format!("task {k}: unexpected exit {}", other.name())),
        }
    }
    Ok(())
}

/// The full battery at the sizes the invariants call for.
pub fn property_battery() -> Vec<(&'static str, Check)> {
    vec![
        ("unitarity", check_unitarity(200, 1)),
        ("propagator vs Taylor oracle", check_propagator_oracle(100, 2)),
        ("norm and trace preservation", check_norm_and_trace(1000, 3)),
        ("Kraus completeness", check_kraus_completeness()),
        ("two-qubit channel lift", check_two_qubit_lift(4)),
        ("rank-1 fidelity", check_rank_one_fidelity(200, 5)),
        ("MLP gradient check", check_mlp_gradient(50, 6)),
        ("dataset oracle, one qubit", check_dataset_oracle(Qubits::One, 2000, 500, 7)),
        ("dataset oracle, two qubits", check_dataset_oracle(Qubits::Two, 1000, 500, 8)),
        ("zero-noise consistency", check_zero_noise_consistency(50, 9)),
        ("loop termination bounds", check_loop_bounds(100, 10)),
    ]
}
