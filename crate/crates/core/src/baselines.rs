// Copyright 2026 The stprep Authors
// SPDX-License-Identifier: Apache-2.0

//! Comparison optimizers over the same discrete action space: one-step
//! greedy, greedy with random escapes, and two continuous optimizers whose
//! controls are snapped to the nearest allowed action at the end.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::control::{controls_hamiltonian, Dynamics};
use crate::dataset::best_action_oracle;
use crate::error::{Error, Result};
use crate::policy::{replay, PrepResult, Termination};
use crate::quantum::{apply_unitary, fidelity, propagator, CMatrix, PureState, SystemState};
use crate::rng::seeded;

fn check_task(dynamics: &Dynamics, init: &PureState, target: &PureState) -> Result<()> {
    dynamics.check_state_dim(init.dim())?;
    dynamics.check_state_dim(target.dim())
}

/// Takes the best one-step action until the threshold, the step cap, or a
/// state where no action improves the fidelity.
pub fn greedy_prepare(init: &PureState, target: &PureState, dynamics: &Dynamics) -> Result<PrepResult> {
    check_task(dynamics, init, target)?;
    let started = Instant::now();
    let cfg = dynamics.config();
    let mut state = SystemState::Pure(init.clone());
    let mut current = fidelity(init, target)?;
    let mut trace = vec![current];
    let mut pulses = Vec::new();
    let end = loop {
        if current > cfg.fidelity_threshold {
            break Termination::Threshold;
        }
        if pulses.len() >= cfg.max_steps {
            break Termination::StepCap;
        }
        let (a, f) = best_action_oracle(&state, target, dynamics, None)?;
        if f <= current {
            break Termination::LocalOptimum;
        }
        if let SystemState::Pure(s) = &state {
            state = SystemState::Pure(dynamics.step(s, a)?);
        }
        current = f;
        pulses.push(a);
        trace.push(f);
    };
    Ok(PrepResult::from_trace(pulses, trace, end, started.elapsed().as_secs_f64()))
}

/// Greedy, except that at a local optimum a uniformly random action is
/// taken and the search continues.
pub fn revised_greedy_prepare<R: Rng + ?Sized>(
    init: &PureState,
    target: &PureState,
    dynamics: &Dynamics,
    rng: &mut R,
) -> Result<PrepResult> {
    check_task(dynamics, init, target)?;
    let started = Instant::now();
    let cfg = dynamics.config();
    let mut state = SystemState::Pure(init.clone());
    let mut current = fidelity(init, target)?;
    let mut f_max = current;
    let mut trace = vec![current];
    let mut pulses = Vec::new();
    while !(f_max > cfg.fidelity_threshold) && pulses.len() < cfg.max_steps {
        let (mut a, mut f) = best_action_oracle(&state, target, dynamics, None)?;
        let SystemState::Pure(s) = &state else {
            unreachable!("noiseless search keeps pure states")
        };
        let next = if f > current {
            dynamics.step(s, a)?
        } else {
            a = rng.random_range(0..dynamics.action_count());
            let next = dynamics.step(s, a)?;
            f = fidelity(&next, target)?;
            next
        };
        state = SystemState::Pure(next);
        current = f;
        f_max = f_max.max(f);
        pulses.push(a);
        trace.push(f);
    }
    let end = if f_max > cfg.fidelity_threshold {
        Termination::Threshold
    } else {
        Termination::StepCap
    };
    Ok(PrepResult::from_trace(pulses, trace, end, started.elapsed().as_secs_f64()))
}

/// Piecewise-constant controls: one row of channel values per segment.
pub type Controls = Vec<Vec<f64>>;

fn segment_propagator(controls: &[f64], dynamics: &Dynamics) -> Result<CMatrix> {
    propagator(&controls_hamiltonian(controls, dynamics.config())?, dynamics.config().dt)
}

/// Fidelity to `target` after applying every segment of `controls`.
pub fn control_fidelity(
    controls: &[Vec<f64>],
    init: &PureState,
    target: &PureState,
    dynamics: &Dynamics,
) -> Result<f64> {
    let mut s = init.clone();
    for c in controls {
        s = apply_unitary(&segment_propagator(c, dynamics)?, &s)?;
    }
    fidelity(&s, target)
}

fn clamp_controls(controls: &mut [Vec<f64>], bounds: &[(f64, f64)]) {
    for seg in controls {
        for (v, &(lo, hi)) in seg.iter_mut().zip(bounds) {
            *v = v.clamp(lo, hi);
        }
    }
}

/// Snaps every segment to its nearest action and reports the fidelity trace
/// of the snapped sequence, cut at the first threshold crossing.
fn snapped_result(
    controls: &[Vec<f64>],
    init: &PureState,
    target: &PureState,
    dynamics: &Dynamics,
    continuous: f64,
    started: Instant,
) -> Result<PrepResult> {
    let mut pulses: Vec<usize> = controls.iter().map(|c| dynamics.actions().nearest(c)).collect();
    let mut trace = replay(&SystemState::Pure(init.clone()), &pulses, target, dynamics, None)?;
    let threshold = dynamics.config().fidelity_threshold;
    let end = match trace.iter().position(|&f| f > threshold) {
        Some(k) => {
            pulses.truncate(k);
            trace.truncate(k + 1);
            Termination::Threshold
        }
        None => Termination::StepCap,
    };
    let mut r = PrepResult::from_trace(pulses, trace, end, started.elapsed().as_secs_f64());
    r.continuous_fidelity = Some(continuous);
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrapeConfig {
    pub iterations: usize,
    pub step_size: f64,
    /// Step of the central differences.
    pub epsilon: f64,
    /// Halvings tried before an iteration is declared stuck.
    pub max_backtracks: usize,
    /// Starting value of every control; the middle of the action range
    /// when absent.
    pub initial_control: Option<Vec<f64>>,
}

impl Default for GrapeConfig {
    fn default() -> Self {
        Self {
            iterations: 300,
            step_size: 0.2,
            epsilon: 1e-4,
            max_backtracks: 12,
            initial_control: None,
        }
    }
}

impl GrapeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("GRAPE needs at least one iteration".into()));
        }
        if !(self.epsilon > 0.0) || !(self.step_size > 0.0) {
            return Err(Error::InvalidParameter(
                "GRAPE epsilon and step size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Central-difference gradient of the final fidelity with respect to every
/// control value.
///
/// Forward states and backward co-states are cached so that each entry costs
/// two extra propagators.
pub fn grape_gradient(
    controls: &[Vec<f64>],
    init: &PureState,
    target: &PureState,
    dynamics: &Dynamics,
    epsilon: f64,
) -> Result<Controls> {
    let n = controls.len();
    let us: Vec<CMatrix> = controls
        .iter()
        .map(|c| segment_propagator(c, dynamics))
        .collect::<Result<_>>()?;
    // forward[k] = U_k ... U_1 |init>, forward[0] = |init>.
    let mut forward = vec![init.as_vector().clone()];
    for u in &us {
        let next = u * forward.last().unwrap();
        forward.push(next);
    }
    // backward[k] = U_{k+1}^dag ... U_n^dag |target>, backward[n] = |target>.
    let mut backward = vec![target.as_vector().clone(); n + 1];
    for k in (0..n).rev() {
        backward[k] = us[k].adjoint() * &backward[k + 1];
    }
    let mut grad = vec![vec![0.0; controls.first().map_or(0, Vec::len)]; n];
    for k in 0..n {
        for ch in 0..controls[k].len() {
            let eval = |delta: f64| -> Result<f64> {
                let mut c = controls[k].clone();
                c[ch] += delta;
                let u = segment_propagator(&c, dynamics)?;
                Ok(backward[k + 1].dotc(&(u * &forward[k])).norm_sqr())
            };
            grad[k][ch] = (eval(epsilon)? - eval(-epsilon)?) / (2.0 * epsilon);
        }
    }
    Ok(grad)
}

/// Gradient ascent on piecewise-constant controls, clamped to the action
/// range, then snapped to the nearest actions.
pub fn grape_prepare(
    init: &PureState,
    target: &PureState,
    dynamics: &Dynamics,
    gcfg: &GrapeConfig,
) -> Result<PrepResult> {
    gcfg.validate()?;
    check_task(dynamics, init, target)?;
    let started = Instant::now();
    let bounds = dynamics.actions().bounds();
    let start: Vec<f64> = match &gcfg.initial_control {
        Some(c) if c.len() == bounds.len() => c.clone(),
        Some(c) => {
            return Err(Error::DimensionMismatch {
                expected: bounds.len(),
                found: c.len(),
            })
        }
        None => bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect(),
    };
    let mut controls: Controls = vec![start; dynamics.config().max_steps];
    clamp_controls(&mut controls, &bounds);
    let mut f = control_fidelity(&controls, init, target, dynamics)?;
    for _ in 0..gcfg.iterations {
        if f > dynamics.config().fidelity_threshold.max(1.0 - 1e-12) {
            break;
        }
        let grad = grape_gradient(&controls, init, target, dynamics, gcfg.epsilon)?;
        let mut step = gcfg.step_size;
        let mut improved = false;
        for _ in 0..=gcfg.max_backtracks {
            let mut trial = controls.clone();
            for (seg, g) in trial.iter_mut().zip(&grad) {
                for (v, d) in seg.iter_mut().zip(g) {
                    *v += step * d;
                }
            }
            clamp_controls(&mut trial, &bounds);
            let ft = control_fidelity(&trial, init, target, dynamics)?;
            if ft > f {
                controls = trial;
                f = ft;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    snapped_result(&controls, init, target, dynamics, f, started)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrabConfig {
    /// Randomized trigonometric components per control channel.
    pub basis_size: usize,
    pub max_evaluations: usize,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Initial simplex edge, as a fraction of the action range.
    pub initial_step: f64,
    pub seed: u64,
}

impl Default for CrabConfig {
    fn default() -> Self {
        Self {
            basis_size: 4,
            max_evaluations: 2000,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_step: 0.25,
            seed: 0,
        }
    }
}

impl CrabConfig {
    pub fn validate(&self) -> Result<()> {
        if self.basis_size == 0 || self.max_evaluations == 0 {
            return Err(Error::InvalidParameter(
                "CRAB needs at least one basis function and one evaluation".into(),
            ));
        }
        if !(self.initial_step > 0.0) {
            return Err(Error::InvalidParameter("CRAB initial step must be positive".into()));
        }
        Ok(())
    }
}

/// `c(t) = c0 + sum_k A_k sin(w_k t) + B_k cos(w_k t)` for every channel,
/// with `w_k = 2 pi (k + r_k) / T`.
#[derive(Clone, Debug, PartialEq)]
pub struct CrabBasis {
    pub frequencies: Vec<f64>,
    pub channels: usize,
}

impl CrabBasis {
    pub fn random<R: Rng + ?Sized>(basis_size: usize, channels: usize, total_time: f64, rng: &mut R) -> Self {
        let frequencies = (1..=basis_size)
            .map(|k| {
                let r: f64 = rng.random_range(-0.5..=0.5);
                2.0 * std::f64::consts::PI * (k as f64 + r) / total_time
            })
            .collect();
        Self { frequencies, channels }
    }

    pub fn parameter_count(&self) -> usize {
        self.channels * (1 + 2 * self.frequencies.len())
    }

    pub fn value(&self, params: &[f64], channel: usize, t: f64) -> f64 {
        let per = 1 + 2 * self.frequencies.len();
        let p = &params[channel * per..(channel + 1) * per];
        let mut v = p[0];
        for (k, w) in self.frequencies.iter().enumerate() {
            v += p[1 + 2 * k] * (w * t).sin() + p[2 + 2 * k] * (w * t).cos();
        }
        v
    }

    /// Controls sampled at the middle of each segment, clamped to `bounds`.
    pub fn sample(&self, params: &[f64], segments: usize, dt: f64, bounds: &[(f64, f64)]) -> Controls {
        (0..segments)
            .map(|k| {
                let t = (k as f64 + 0.5) * dt;
                (0..self.channels)
                    .map(|ch| self.value(params, ch, t).clamp(bounds[ch].0, bounds[ch].1))
                    .collect()
            })
            .collect()
    }
}

/// Minimizes `f` with the downhill simplex method. Returns the best point,
/// its value, and the number of evaluations spent.
pub fn nelder_mead<F>(
    mut f: F,
    start: &[f64],
    steps: &[f64],
    cfg: &CrabConfig,
) -> Result<(Vec<f64>, f64, usize)>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = start.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> Result<f64> {
        *evals += 1;
        f(x)
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), eval(start, &mut evals)?));
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] += steps[i];
        let v = eval(&x, &mut evals)?;
        simplex.push((x, v));
    }
    let along = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect()
    };
    while evals < cfg.max_evaluations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[n].1 - simplex[0].1 <= 1e-14 {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflected = along(&centroid, &worst.0, -cfg.reflection);
        let fr = eval(&reflected, &mut evals)?;
        if fr < simplex[0].1 {
            let expanded = along(&centroid, &worst.0, -cfg.reflection * cfg.expansion);
            let fe = eval(&expanded, &mut evals)?;
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (toward, fbase) = if fr < worst.1 {
                (reflected.clone(), fr)
            } else {
                (worst.0.clone(), worst.1)
            };
            let contracted = along(&centroid, &toward, cfg.contraction);
            let fc = eval(&contracted, &mut evals)?;
            if fc < fbase {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let x = along(&best, &item.0, cfg.shrink);
                    let v = eval(&x, &mut evals)?;
                    *item = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, v) = simplex.swap_remove(0);
    Ok((x, v, evals))
}

/// Optimizes randomized-basis coefficients with a simplex search starting
/// from all-zero coefficients, samples the controls at segment midpoints,
/// and snaps them to the nearest actions.
pub fn crab_prepare(
    init: &PureState,
    target: &PureState,
    dynamics: &Dynamics,
    ccfg: &CrabConfig,
) -> Result<PrepResult> {
    ccfg.validate()?;
    check_task(dynamics, init, target)?;
    let started = Instant::now();
    let cfg = dynamics.config();
    let bounds = dynamics.actions().bounds();
    let mut rng = seeded(ccfg.seed);
    let basis = CrabBasis::random(ccfg.basis_size, bounds.len(), cfg.total_time, &mut rng);
    let per = 1 + 2 * ccfg.basis_size;
    let steps: Vec<f64> = (0..basis.parameter_count())
        .map(|i| {
            let (lo, hi) = bounds[i / per];
            ccfg.initial_step * (hi - lo)
        })
        .collect();
    let start = vec![0.0; basis.parameter_count()];
    let objective = |p: &[f64]| -> Result<f64> {
        let controls = basis.sample(p, cfg.max_steps, cfg.dt, &bounds);
        Ok(1.0 - control_fidelity(&controls, init, target, dynamics)?)
    };
    let (best, loss, _) = nelder_mead(objective, &start, &steps, ccfg)?;
    let controls = basis.sample(&best, cfg.max_steps, cfg.dt, &bounds);
    snapped_result(&controls, init, target, dynamics, 1.0 - loss, started)
}
