// Copyright 2026 The stprep Authors
// SPDX-License-Identifier: Apache-2.0

//! Closed-loop pulse design with a trained policy network.
//!
//! From the initial state the network is asked for the most probable
//! action, the state is advanced by one segment, and the loop repeats until
//! the best fidelity seen exceeds the threshold or `N` actions are spent.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::control::Dynamics;
use crate::dataset::{encode, next_state, Encoding};
use crate::error::{Error, Result};
use crate::mlp::MlpModel;
use crate::quantum::{CompositeChannel, DensityMatrix, PureState, SystemState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Threshold,
    StepCap,
    /// No action improved the fidelity (greedy baseline).
    LocalOptimum,
    /// A fixed sequence was replayed to its end.
    SequenceEnd,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Threshold => "threshold",
            Termination::StepCap => "step-cap",
            Termination::LocalOptimum => "local-optimum",
            Termination::SequenceEnd => "sequence-end",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrepResult {
    pub pulse_sequence: Vec<usize>,
    /// Fidelity before any action, then after each action.
    pub fidelity_trace: Vec<f64>,
    pub f_max: f64,
    pub steps_used: usize,
    pub terminated_by: Termination,
    /// Wall-clock seconds spent designing the sequence.
    pub design_time: f64,
    /// Fidelity of the unsnapped continuous controls, for optimizers that
    /// have them.
    pub continuous_fidelity: Option<f64>,
}

impl PrepResult {
    pub(crate) fn from_trace(
        pulse_sequence: Vec<usize>,
        fidelity_trace: Vec<f64>,
        terminated_by: Termination,
        design_time: f64,
    ) -> Self {
        let f_max = fidelity_trace.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            steps_used: pulse_sequence.len(),
            pulse_sequence,
            fidelity_trace,
            f_max,
            terminated_by,
            design_time,
            continuous_fidelity: None,
        }
    }

    pub fn final_fidelity(&self) -> f64 {
        *self.fidelity_trace.last().expect("trace holds the initial fidelity")
    }

    /// Plain-text record: `#` header lines, then one tab-separated line per
    /// step with the action index, its control values and the fidelity.
    pub fn write_record<W: Write>(
        &self,
        mut w: W,
        dynamics: &Dynamics,
        init: &SystemState,
        target: &PureState,
    ) -> Result<()> {
        writeln!(w, "# init={}", describe_state(init))?;
        writeln!(w, "# target={target}")?;
        writeln!(
            w,
            "# qubits={} dt={} max_steps={} threshold={} actions={}",
            dynamics.qubits(),
            dynamics.config().dt,
            dynamics.config().max_steps,
            dynamics.config().fidelity_threshold,
            dynamics.actions().id()
        )?;
        writeln!(
            w,
            "# f_max={} steps_used={} terminated_by={} design_time={}",
            self.f_max,
            self.steps_used,
            self.terminated_by.name(),
            self.design_time
        )?;
        if let Some(c) = self.continuous_fidelity {
            writeln!(w, "# continuous_fidelity={c}")?;
        }
        writeln!(w, "step\taction\tcontrols\tfidelity")?;
        writeln!(w, "0\t-\t-\t{}", self.fidelity_trace[0])?;
        for (k, (&a, f)) in self
            .pulse_sequence
            .iter()
            .zip(&self.fidelity_trace[1..])
            .enumerate()
        {
            let controls = dynamics
                .actions()
                .value(a)?
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",");
            writeln!(w, "{}\t{a}\t{controls}\t{f}", k + 1)?;
        }
        Ok(())
    }
}

fn describe_state(s: &SystemState) -> String {
    match s {
        SystemState::Pure(p) => p.to_string(),
        SystemState::Mixed(rho) => {
            let mut out = String::from("rho[");
            for (i, v) in rho.matrix().iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{}{:+}i", v.re, v.im);
            }
            out.push(']');
            out
        }
    }
}

fn check_task(model: &MlpModel, dynamics: &Dynamics, init_dim: usize, target: &PureState) -> Result<()> {
    model.meta().ensure_actions(dynamics.actions())?;
    dynamics.check_state_dim(init_dim)?;
    dynamics.check_state_dim(target.dim())?;
    if model.input_len() != model.meta().encoding.feature_len(dynamics.dim()) {
        return Err(Error::Mismatch(format!(
            "model takes {} inputs, {} encoding needs {}",
            model.input_len(),
            model.meta().encoding,
            model.meta().encoding.feature_len(dynamics.dim())
        )));
    }
    Ok(())
}

fn policy_loop(
    model: &MlpModel,
    mut state: SystemState,
    target: &PureState,
    dynamics: &Dynamics,
    noise: Option<&CompositeChannel>,
) -> Result<PrepResult> {
    let started = Instant::now();
    let cfg = dynamics.config();
    let encoding = model.meta().encoding;
    let mut f_max = state.fidelity_to(target)?;
    let mut trace = vec![f_max];
    let mut pulses = Vec::with_capacity(cfg.max_steps);
    while !(f_max > cfg.fidelity_threshold) && pulses.len() < cfg.max_steps {
        let action = model.predict(&encode(encoding, &state, target)?)?;
        state = next_state(&state, action, dynamics, noise)?;
        let f = state.fidelity_to(target)?;
        f_max = f_max.max(f);
        pulses.push(action);
        trace.push(f);
    }
    let end = if f_max > cfg.fidelity_threshold {
        Termination::Threshold
    } else {
        Termination::StepCap
    };
    Ok(PrepResult::from_trace(pulses, trace, end, started.elapsed().as_secs_f64()))
}

/// Designs a pulse sequence for `init -> target` with the network.
pub fn prepare(
    model: &MlpModel,
    init: &PureState,
    target: &PureState,
    dynamics: &Dynamics,
) -> Result<PrepResult> {
    check_task(model, dynamics, init.dim(), target)?;
    policy_loop(model, SystemState::Pure(init.clone()), target, dynamics, None)
}

/// Fidelity trace of a fixed sequence applied to `init`, with `noise` after
/// every step when given.
pub fn replay(
    init: &SystemState,
    pulses: &[usize],
    target: &PureState,
    dynamics: &Dynamics,
    noise: Option<&CompositeChannel>,
) -> Result<Vec<f64>> {
    dynamics.check_state_dim(init.dim())?;
    dynamics.check_state_dim(target.dim())?;
    if let Some(ch) = noise {
        dynamics.check_noise(ch)?;
    }
    let mut state = init.clone();
    let mut trace = Vec::with_capacity(pulses.len() + 1);
    trace.push(state.fidelity_to(target)?);
    for &a in pulses {
        state = next_state(&state, a, dynamics, noise)?;
        trace.push(state.fidelity_to(target)?);
    }
    Ok(trace)
}

/// Runs `designed.pulse_sequence` through the noisy pipeline from `rho_init`.
/// Design time and the continuous fidelity carry over from `designed`.
pub fn replay_noisy(
    designed: &PrepResult,
    rho_init: &DensityMatrix,
    target: &PureState,
    dynamics: &Dynamics,
    channel: &CompositeChannel,
) -> Result<PrepResult> {
    let trace = replay(
        &SystemState::Mixed(rho_init.clone()),
        &designed.pulse_sequence,
        target,
        dynamics,
        Some(channel),
    )?;
    let mut out = PrepResult::from_trace(
        designed.pulse_sequence.clone(),
        trace,
        designed.terminated_by,
        designed.design_time,
    );
    let threshold = dynamics.config().fidelity_threshold;
    if (out.terminated_by == Termination::Threshold) != (out.f_max > threshold) {
        out.terminated_by = Termination::SequenceEnd;
    }
    out.continuous_fidelity = designed.continuous_fidelity;
    Ok(out)
}

/// Pulse design under a noise channel.
///
/// A model trained on density-matrix features runs closed-loop on the noisy
/// state. A model trained on pure states designs the ideal sequence from the
/// (pure) initial state, which is then replayed through the channel.
pub fn prepare_noisy(
    model: &MlpModel,
    rho_init: &DensityMatrix,
    target: &PureState,
    dynamics: &Dynamics,
    channel: &CompositeChannel,
) -> Result<PrepResult> {
    check_task(model, dynamics, rho_init.dim(), target)?;
    dynamics.check_noise(channel)?;
    match model.meta().encoding {
        Encoding::DensityPair => policy_loop(
            model,
            SystemState::Mixed(rho_init.clone()),
            target,
            dynamics,
            Some(channel),
        ),
        Encoding::PurePair => {
            let init = rho_init.to_pure().map_err(|_| {
                Error::InvalidState(
                    "a model trained on pure states needs a pure initial state".into(),
                )
            })?;
            let ideal = policy_loop(model, SystemState::Pure(init), target, dynamics, None)?;
            replay_noisy(&ideal, rho_init, target, dynamics, channel)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{ActionSet, Qubits};
    use crate::dataset::sample_haar_state;
    use crate::mlp::{default_layer_sizes, ModelMeta};
    use crate::quantum::{fidelity, ChannelKind};
    use crate::rng::seeded;

    fn model(qubits: Qubits, encoding: Encoding, seed: u64) -> MlpModel {
        let meta = ModelMeta::new(qubits, &ActionSet::for_qubits(qubits), encoding, seed);
        MlpModel::init(&default_layer_sizes(qubits, encoding), seed, meta).unwrap()
    }

    /// Network whose output is the same for every input: action `a`.
    fn constant_model(a: usize) -> MlpModel {
        let mut m = model(Qubits::One, Encoding::PurePair, 0);
        let last = m.layers_mut().last_mut().unwrap();
        last.weights.fill(0.0);
        last.bias.fill(0.0);
        last.bias[a] = 5.0;
        m
    }

    #[test]
    fn identical_states_exit_immediately() {
        let dynamics = Dynamics::standard(Qubits::One);
        let s = PureState::basis(2, 0).unwrap();
        let r = prepare(&model(Qubits::One, Encoding::PurePair, 1), &s, &s, &dynamics).unwrap();
        assert!(r.pulse_sequence.is_empty());
        assert_eq!(r.steps_used, 0);
        assert_eq!(r.terminated_by, Termination::Threshold);
        assert!((r.f_max - 1.0).abs() < 1e-12);
        assert_eq!(r.fidelity_trace.len(), 1);
    }

    #[test]
    fn step_cap_spends_exactly_n_actions() {
        // J = 7 for every step never reaches |1> from |0> to 0.999.
        let dynamics = Dynamics::standard(Qubits::One);
        let init = PureState::basis(2, 0).unwrap();
        let target = PureState::basis(2, 1).unwrap();
        let r = prepare(&constant_model(7), &init, &target, &dynamics).unwrap();
        assert_eq!(r.terminated_by, Termination::StepCap);
        assert_eq!(r.steps_used, 20);
        assert_eq!(r.fidelity_trace.len(), 21);
        assert!(r.pulse_sequence.iter().all(|&a| a == 7));
        assert_eq!(r.f_max, r.fidelity_trace.iter().copied().fold(0.0, f64::max));
    }

    #[test]
    fn constant_zero_coupling_reaches_its_own_orbit() {
        // With J = 0 each step rotates about x by 2*dt, so the fidelity to
        // the three-step image of |0> is cos^2((3 - k) dt).
        let dynamics = Dynamics::standard(Qubits::One);
        let init = PureState::basis(2, 0).unwrap();
        let target = (0..3).fold(init.clone(), |s, _| dynamics.step(&s, 0).unwrap());
        let r = prepare(&constant_model(0), &init, &target, &dynamics).unwrap();
        assert_eq!(r.terminated_by, Termination::Threshold);
        assert_eq!(r.pulse_sequence, vec![0, 0, 0]);
        let dt = std::f64::consts::PI / 5.0;
        for (k, f) in r.fidelity_trace.iter().enumerate() {
            let expected = ((3.0 - k as f64) * dt).cos().powi(2);
            assert!((f - expected).abs() < 1e-9, "step {k}: {f} vs {expected}");
        }
    }

    #[test]
    fn bounds_hold_for_random_tasks() {
        let mut rng = seeded(3);
        for qubits in [Qubits::One, Qubits::Two] {
            let dynamics = Dynamics::standard(qubits);
            let m = model(qubits, Encoding::PurePair, 4);
            for _ in 0..30 {
                let a = sample_haar_state(qubits.dim(), &mut rng).unwrap();
                let b = sample_haar_state(qubits.dim(), &mut rng).unwrap();
                let r = prepare(&m, &a, &b, &dynamics).unwrap();
                assert!(r.steps_used <= dynamics.config().max_steps);
                assert_eq!(r.fidelity_trace.len(), r.steps_used + 1);
                assert_eq!(r.f_max, r.fidelity_trace.iter().copied().fold(0.0, f64::max));
                assert!((0.0..=1.0 + 1e-12).contains(&r.f_max));
                if r.terminated_by == Termination::Threshold {
                    assert!(r.f_max > 0.999);
                } else {
                    assert_eq!(r.steps_used, dynamics.config().max_steps);
                }
                let again = prepare(&m, &a, &b, &dynamics).unwrap();
                assert_eq!(again.pulse_sequence, r.pulse_sequence);
                assert_eq!(again.fidelity_trace, r.fidelity_trace);
                let last = fidelity(
                    &r.pulse_sequence
                        .iter()
                        .fold(a.clone(), |s, &p| dynamics.step(&s, p).unwrap()),
                    &b,
                )
                .unwrap();
                assert!((last - r.final_fidelity()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_mismatched_model() {
        let dynamics = Dynamics::standard(Qubits::Two);
        let s = PureState::basis(4, 0).unwrap();
        let m = model(Qubits::One, Encoding::PurePair, 1);
        assert!(matches!(prepare(&m, &s, &s, &dynamics), Err(Error::Mismatch(_))));
    }

    #[test]
    fn zero_noise_matches_noiseless_design() {
        let mut rng = seeded(8);
        let dynamics = Dynamics::standard(Qubits::One);
        let pure = model(Qubits::One, Encoding::PurePair, 2);
        let dense = model(Qubits::One, Encoding::DensityPair, 2);
        let ch = CompositeChannel::for_qubits(ChannelKind::BitFlip, 0.0, 1).unwrap();
        for _ in 0..20 {
            let a = sample_haar_state(2, &mut rng).unwrap();
            let b = sample_haar_state(2, &mut rng).unwrap();
            for m in [&pure, &dense] {
                let clean = prepare(m, &a, &b, &dynamics).unwrap();
                let noisy = prepare_noisy(m, &a.to_density(), &b, &dynamics, &ch).unwrap();
                assert_eq!(clean.pulse_sequence, noisy.pulse_sequence);
                assert_eq!(clean.terminated_by, noisy.terminated_by);
                for (x, y) in clean.fidelity_trace.iter().zip(&noisy.fidelity_trace) {
                    assert!((x - y).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn noisy_replay_keeps_the_ideal_sequence() {
        let dynamics = Dynamics::standard(Qubits::One);
        let init = PureState::basis(2, 0).unwrap();
        let target = (0..3).fold(init.clone(), |s, _| dynamics.step(&s, 0).unwrap());
        let m = constant_model(0);
        let ch = CompositeChannel::for_qubits(ChannelKind::BitFlip, 0.05, 1).unwrap();
        let ideal = prepare(&m, &init, &target, &dynamics).unwrap();
        let noisy = prepare_noisy(&m, &init.to_density(), &target, &dynamics, &ch).unwrap();
        assert_eq!(noisy.pulse_sequence, ideal.pulse_sequence);
        assert!(noisy.f_max < ideal.f_max);
        assert_eq!(noisy.terminated_by, Termination::SequenceEnd);
        assert!(prepare_noisy(
            &m,
            &DensityMatrix::maximally_mixed(2).unwrap(),
            &target,
            &dynamics,
            &ch
        )
        .is_err());
        let wrong = CompositeChannel::for_qubits(ChannelKind::BitFlip, 0.05, 2).unwrap();
        assert!(prepare_noisy(&m, &init.to_density(), &target, &dynamics, &wrong).is_err());
    }

    #[test]
    fn record_has_one_line_per_step() {
        let dynamics = Dynamics::standard(Qubits::One);
        let init = PureState::basis(2, 0).unwrap();
        let target = PureState::basis(2, 1).unwrap();
        let r = prepare(&constant_model(0), &init, &target, &dynamics).unwrap();
        let mut buf = Vec::new();
        r.write_record(&mut buf, &dynamics, &SystemState::Pure(init), &target)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "step\taction\tcontrols\tfidelity");
        assert_eq!(rows.len(), r.steps_used + 2);
        assert!(rows[1].starts_with("0\t-\t-\t"));
        assert!(rows[2].starts_with("1\t0\t0\t"));
    }
}
