// Copyright 2026 The stprep Authors
// SPDX-License-Identifier: Apache-2.0

//! Control Hamiltonians of singlet-triplet qubits and the discrete action
//! sets used to drive them.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{
    apply_unitary, conjugate, identity, kron, pauli_x, pauli_z, propagator, CMatrix,
    CompositeChannel, DensityMatrix, HermitianOperator, PureState, C64,
};

/// Number of singlet-triplet qubits in the register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Qubits {
    One,
    Two,
}

impl Qubits {
    pub fn count(self) -> usize {
        match self {
            Qubits::One => 1,
            Qubits::Two => 2,
        }
    }

    /// Hilbert-space dimension.
    pub fn dim(self) -> usize {
        match self {
            Qubits::One => 2,
            Qubits::Two => 4,
        }
    }

    pub fn from_count(n: usize) -> Result<Self> {
        match n {
            1 => Ok(Qubits::One),
            2 => Ok(Qubits::Two),
            n => Err(Error::InvalidParameter(format!(
                "qubit count must be 1 or 2, got {n}"
            ))),
        }
    }

    pub fn from_dim(d: usize) -> Result<Self> {
        match d {
            2 => Ok(Qubits::One),
            4 => Ok(Qubits::Two),
            d => Err(Error::InvalidParameter(format!(
                "no qubit register of dimension {d}"
            ))),
        }
    }
}

impl TryFrom<u8> for Qubits {
    type Error = Error;

    fn try_from(n: u8) -> Result<Self> {
        Qubits::from_count(n as usize)
    }
}

impl From<Qubits> for u8 {
    fn from(q: Qubits) -> u8 {
        q.count() as u8
    }
}

impl fmt::Display for Qubits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.count())
    }
}

/// Evolution schedule and fixed Hamiltonian parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlConfig {
    pub qubits: Qubits,
    pub total_time: f64,
    pub dt: f64,
    pub max_steps: usize,
    pub fidelity_threshold: f64,
    /// Zeeman gap of the single-qubit model.
    pub h: f64,
    pub h1: f64,
    pub h2: f64,
}

impl ControlConfig {
    /// T = 4 pi, dt = pi / 5, N = 20.
    pub fn single_qubit() -> Self {
        Self {
            qubits: Qubits::One,
            total_time: 4.0 * PI,
            dt: PI / 5.0,
            max_steps: 20,
            fidelity_threshold: 0.999,
            h: 1.0,
            h1: 1.0,
            h2: 1.0,
        }
    }

    /// T = 10 pi, dt = pi / 2, N = 20.
    pub fn two_qubit() -> Self {
        Self {
            qubits: Qubits::Two,
            total_time: 10.0 * PI,
            dt: PI / 2.0,
            ..Self::single_qubit()
        }
    }

    pub fn for_qubits(qubits: Qubits) -> Self {
        match qubits {
            Qubits::One => Self::single_qubit(),
            Qubits::Two => Self::two_qubit(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.fidelity_threshold > 0.0 && self.fidelity_threshold <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "fidelity threshold {} outside (0, 1]",
                self.fidelity_threshold
            )));
        }
        let steps = (self.total_time / self.dt).round();
        if self.max_steps == 0 || steps != self.max_steps as f64 {
            return Err(Error::InvalidParameter(format!(
                "max_steps {} inconsistent with T/dt = {}",
                self.max_steps,
                self.total_time / self.dt
            )));
        }
        Ok(())
    }
}

/// Ordered list of allowed control values. An action is an index into it.
///
/// Each value holds one exchange coupling per qubit. The two-qubit set is
/// row-major over `(J1, J2)`, so index `4 (J1 - 1) + (J2 - 1)`; model and
/// dataset files depend on this order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionSet {
    qubits: Qubits,
    values: Vec<Vec<f64>>,
}

impl ActionSet {
    pub fn new(qubits: Qubits, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("action set is empty".into()));
        }
        for (i, v) in values.iter().enumerate() {
            if v.len() != qubits.count() {
                return Err(Error::InvalidParameter(format!(
                    "action {i} has {} controls, expected {}",
                    v.len(),
                    qubits.count()
                )));
            }
            if v.iter().any(|j| !(j.is_finite() && *j >= 0.0)) {
                return Err(Error::InvalidParameter(format!(
                    "action {i} has a negative or non-finite coupling"
                )));
            }
            if values[..i].contains(v) {
                return Err(Error::InvalidParameter(format!("action {i} is a duplicate")));
            }
        }
        Ok(Self { qubits, values })
    }

    /// `J in {0, ..., 7}`.
    pub fn single_qubit() -> Self {
        Self {
            qubits: Qubits::One,
            values: (0..8).map(|j| vec![j as f64]).collect(),
        }
    }

    /// `(J1, J2) in {1, ..., 4}^2`, row-major.
    pub fn two_qubit() -> Self {
        let values = (1..=4)
            .flat_map(|j1| (1..=4).map(move |j2| vec![j1 as f64, j2 as f64]))
            .collect();
        Self {
            qubits: Qubits::Two,
            values,
        }
    }

    pub fn for_qubits(qubits: Qubits) -> Self {
        match qubits {
            Qubits::One => Self::single_qubit(),
            Qubits::Two => Self::two_qubit(),
        }
    }

    pub fn qubits(&self) -> Qubits {
        self.qubits
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn value(&self, action: usize) -> Result<&[f64]> {
        self.values
            .get(action)
            .map(Vec::as_slice)
            .ok_or(Error::ActionOutOfRange {
                index: action,
                count: self.values.len(),
            })
    }

    /// Stable textual identity of the set, stored in file headers.
    pub fn id(&self) -> String {
        let body: Vec<String> = self
            .values
            .iter()
            .map(|v| {
                v.iter()
                    .map(|j| format!("{j}"))
                    .collect::<Vec<_>>()
                    .join(":")
            })
            .collect();
        format!("q{}[{}]", self.qubits.count(), body.join(","))
    }

    /// `(min, max)` of each control channel over the set.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        (0..self.qubits.count())
            .map(|ch| {
                self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v[ch]), hi.max(v[ch]))
                })
            })
            .collect()
    }

    /// Index of the allowed action nearest to continuous `controls`.
    ///
    /// Each channel is rounded independently to its closest allowed value
    /// (ties to the smaller one); when that combination is not in the set
    /// the action with the smallest Euclidean distance is used.
    pub fn nearest(&self, controls: &[f64]) -> usize {
        let snapped: Vec<f64> = (0..self.qubits.count())
            .map(|ch| {
                let mut allowed: Vec<f64> = self.values.iter().map(|v| v[ch]).collect();
                allowed.sort_by(|a, b| a.total_cmp(b));
                allowed.dedup();
                allowed.into_iter().fold(f64::NAN, |best, v| {
                    if best.is_nan() || (v - controls[ch]).abs() < (best - controls[ch]).abs() {
                        v
                    } else {
                        best
                    }
                })
            })
            .collect();
        if let Some(i) = self.values.iter().position(|v| *v == snapped) {
            return i;
        }
        let dist = |v: &[f64]| -> f64 {
            v.iter().zip(controls).map(|(a, b)| (a - b).powi(2)).sum()
        };
        (0..self.values.len())
            .min_by(|&a, &b| dist(&self.values[a]).total_cmp(&dist(&self.values[b])))
            .unwrap_or(0)
    }
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn check_coupling(name: &str, j: f64) -> Result<()> {
    if j.is_finite() && j >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "exchange coupling {name} must be finite and non-negative, got {j}"
        )))
    }
}

/// `H = J sigma_z + h sigma_x`.
pub fn single_qubit_hamiltonian(j: f64, h: f64) -> Result<HermitianOperator> {
    check_coupling("J", j)?;
    HermitianOperator::new(pauli_z() * real(j) + pauli_x() * real(h))
}

/// Two capacitively coupled singlet-triplet qubits with `J12 = J1 J2 / 2`:
///
/// `H = 1/2 [J1 (Z (x) I) + J2 (I (x) Z) + h1 (X (x) I) + h2 (I (x) X)
///      + J12/2 ((Z - I) (x) (Z - I))]`.
pub fn two_qubit_hamiltonian(j1: f64, j2: f64, h1: f64, h2: f64) -> Result<HermitianOperator> {
    check_coupling("J1", j1)?;
    check_coupling("J2", j2)?;
    let id = identity(2);
    let (x, z) = (pauli_x(), pauli_z());
    let j12 = j1 * j2 / 2.0;
    let zm = &z - &id;
    let h = kron(&z, &id) * real(j1)
        + kron(&id, &z) * real(j2)
        + kron(&x, &id) * real(h1)
        + kron(&id, &x) * real(h2)
        + kron(&zm, &zm) * real(j12 / 2.0);
    HermitianOperator::new(h * real(0.5))
}

/// Hamiltonian for arbitrary (continuous) control values, one per qubit.
pub fn controls_hamiltonian(controls: &[f64], cfg: &ControlConfig) -> Result<HermitianOperator> {
    match (cfg.qubits, controls) {
        (Qubits::One, [j]) => single_qubit_hamiltonian(*j, cfg.h),
        (Qubits::Two, [j1, j2]) => two_qubit_hamiltonian(*j1, *j2, cfg.h1, cfg.h2),
        (q, c) => Err(Error::DimensionMismatch {
            expected: q.count(),
            found: c.len(),
        }),
    }
}

pub fn action_to_hamiltonian(
    action: usize,
    actions: &ActionSet,
    cfg: &ControlConfig,
) -> Result<HermitianOperator> {
    if actions.qubits() != cfg.qubits {
        return Err(Error::Mismatch(format!(
            "action set is for {} qubit(s) but the config for {}",
            actions.qubits(),
            cfg.qubits
        )));
    }
    controls_hamiltonian(actions.value(action)?, cfg)
}

/// One-step propagators for every allowed action, computed once.
///
/// All pulse designers share this: a step is a fixed `exp(-i H(a) dt)`.
#[derive(Clone, Debug)]
pub struct Dynamics {
    cfg: ControlConfig,
    actions: ActionSet,
    propagators: Vec<CMatrix>,
}

impl Dynamics {
    pub fn new(cfg: ControlConfig, actions: ActionSet) -> Result<Self> {
        cfg.validate()?;
        let propagators = (0..actions.len())
            .map(|a| propagator(&action_to_hamiltonian(a, &actions, &cfg)?, cfg.dt))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cfg,
            actions,
            propagators,
        })
    }

    /// Defaults for the given register size.
    pub fn standard(qubits: Qubits) -> Self {
        Self::new(ControlConfig::for_qubits(qubits), ActionSet::for_qubits(qubits))
            .expect("default control configuration is valid")
    }

    pub fn config(&self) -> &ControlConfig {
        &self.cfg
    }

    pub fn actions(&self) -> &ActionSet {
        &self.actions
    }

    pub fn qubits(&self) -> Qubits {
        self.cfg.qubits
    }

    pub fn dim(&self) -> usize {
        self.cfg.qubits.dim()
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn propagator(&self, action: usize) -> Result<&CMatrix> {
        self.propagators.get(action).ok_or(Error::ActionOutOfRange {
            index: action,
            count: self.propagators.len(),
        })
    }

    pub fn step(&self, s: &PureState, action: usize) -> Result<PureState> {
        apply_unitary(self.propagator(action)?, s)
    }

    /// Unitary step followed by the noise channel, when one is given.
    pub fn step_density(
        &self,
        rho: &DensityMatrix,
        action: usize,
        noise: Option<&CompositeChannel>,
    ) -> Result<DensityMatrix> {
        let evolved = conjugate(self.propagator(action)?, rho)?;
        match noise {
            Some(ch) => ch.apply(&evolved),
            None => Ok(evolved),
        }
    }

    /// Checks that a noise channel acts on this system's Hilbert space.
    pub fn check_noise(&self, noise: &CompositeChannel) -> Result<()> {
        if noise.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: noise.dim(),
            });
        }
        Ok(())
    }

    pub fn check_state_dim(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: d,
            });
        }
        Ok(())
    }
}
