// Copyright 2026 The stprep Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex linear algebra for two- and four-level systems.
//!
//! Everything here is a pure function over immutable values. States are
//! stored as column vectors in the computational basis
//! (`{|S>, |T0>}` for one qubit, `{|SS>, |ST0>, |T0S>, |T0T0>}` for two).
//! Propagators are computed from the Hermitian eigendecomposition, which is
//! exact at these sizes and has no step-size parameter.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

const NORM_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-12;
const DENSITY_HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
/// Floor on density-matrix eigenvalues. Repeated channel applications drift
/// slightly below zero.
const POSITIVITY_TOL: f64 = -1e-9;
const COMPLETENESS_TOL: f64 = 1e-10;
const PHASE_FIX_CUTOFF: f64 = 1e-9;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn check_dim(d: usize) -> Result<()> {
    if d == 2 || d == 4 {
        Ok(())
    } else {
        Err(Error::InvalidState(format!(
            "dimension {d} is not supported (expected 2 or 4)"
        )))
    }
}

fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Largest elementwise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// A normalized state vector of dimension 2 or 4.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: CVector,
}

impl PureState {
    /// Wraps amplitudes that must already have unit norm.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        check_dim(amps.len())?;
        let v = CVector::from_vec(amps);
        let norm_sq = v.norm_squared();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "squared norm {norm_sq} differs from 1"
            )));
        }
        Ok(Self { amps: v })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        check_dim(amps.len())?;
        let v = CVector::from_vec(amps);
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(Self { amps: v / c(norm, 0.0) })
    }

    pub fn basis(d: usize, index: usize) -> Result<Self> {
        check_dim(d)?;
        if index >= d {
            return Err(Error::InvalidState(format!(
                "basis index {index} out of range for dimension {d}"
            )));
        }
        let mut v = CVector::zeros(d);
        v[index] = c(1.0, 0.0);
        Ok(Self { amps: v })
    }

    /// Used for outputs of unitary maps, whose norm is preserved up to
    /// rounding.
    pub(crate) fn from_vector_unchecked(amps: CVector) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.amps.as_slice()
    }

    pub fn as_vector(&self) -> &CVector {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// Multiplies every amplitude by `e^{i phase}`.
    pub fn with_global_phase(&self, phase: f64) -> Self {
        Self {
            amps: &self.amps * C64::from_polar(1.0, phase),
        }
    }

    pub fn inner(&self, other: &PureState) -> Result<C64> {
        same_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            m: &self.amps * self.amps.adjoint(),
        }
    }
}

impl fmt::Display for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .amps
            .iter()
            .map(|a| format!("{:+.6}{:+.6}i", a.re, a.im))
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidState("density matrix must be square".into()));
        }
        check_dim(m.nrows())?;
        let herm = max_abs_diff(&m, &m.adjoint());
        if herm > DENSITY_HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix is not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let rho = Self { m };
        let min_eig = rho.min_eigenvalue();
        if min_eig < POSITIVITY_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        Self { m }
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Self {
            m: identity(d) * c(1.0 / d as f64, 0.0),
        })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.m + self.m.adjoint()) * c(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.iter().copied().collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Largest deviation from Hermiticity, for invariant checks.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.m, &self.m.adjoint())
    }

    /// Recovers `|s>` from a rank-one `|s><s|`, up to global phase.
    pub fn to_pure(&self) -> Result<PureState> {
        let purity = self.purity();
        if (purity - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!(
                "density matrix is mixed (purity {purity})"
            )));
        }
        let herm = (&self.m + self.m.adjoint()) * c(0.5, 0.0);
        let eig = SymmetricEigen::new(herm);
        let (idx, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            });
        let v = eig.eigenvectors.column(idx).into_owned();
        Ok(phase_fix(&PureState::normalized(v.as_slice().to_vec())?))
    }
}

/// Matrix equal to its conjugate transpose, in energy units with hbar = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    m: CMatrix,
}

impl HermitianOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidOperator("operator must be square".into()));
        }
        let dev = max_abs_diff(&m, &m.adjoint());
        if dev > HERMITIAN_TOL {
            return Err(Error::InvalidOperator(format!(
                "operator is not Hermitian (deviation {dev:e})"
            )));
        }
        Ok(Self { m })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    /// Real eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(self.m.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }
}

/// Either a state vector or a density matrix, for code paths that serve
/// both the noiseless and the noisy pipelines.
#[derive(Clone, Debug, PartialEq)]
pub enum SystemState {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl SystemState {
    pub fn dim(&self) -> usize {
        match self {
            SystemState::Pure(s) => s.dim(),
            SystemState::Mixed(r) => r.dim(),
        }
    }

    pub fn fidelity_to(&self, target: &PureState) -> Result<f64> {
        match self {
            SystemState::Pure(s) => fidelity(s, target),
            SystemState::Mixed(r) => fidelity_mixed(r, target),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        match self {
            SystemState::Pure(s) => s.to_density(),
            SystemState::Mixed(r) => r.clone(),
        }
    }
}

/// `|<a|b>|^2`.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// `<target|rho|target>`.
pub fn fidelity_mixed(rho: &DensityMatrix, target: &PureState) -> Result<f64> {
    same_dim(rho.dim(), target.dim())?;
    let t = target.as_vector();
    let v = &rho.m * t;
    Ok(t.dotc(&v).re)
}

/// `exp(-i H dt)` via `H = V diag(lambda) V^dagger`.
pub fn propagator(h: &HermitianOperator, dt: f64) -> Result<CMatrix> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "time step must be finite and non-negative, got {dt}"
        )));
    }
    let d = h.dim();
    if dt == 0.0 {
        return Ok(identity(d));
    }
    let eig = SymmetricEigen::new(h.m.clone());
    let v = &eig.eigenvectors;
    let phases = CMatrix::from_diagonal(&CVector::from_iterator(
        d,
        eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -l * dt)),
    ));
    Ok(v * phases * v.adjoint())
}

/// Applies a unitary to a state vector.
pub fn apply_unitary(u: &CMatrix, s: &PureState) -> Result<PureState> {
    same_dim(u.ncols(), s.dim())?;
    Ok(PureState::from_vector_unchecked(u * &s.amps))
}

/// `U rho U^dagger`.
pub fn conjugate(u: &CMatrix, rho: &DensityMatrix) -> Result<DensityMatrix> {
    same_dim(u.ncols(), rho.dim())?;
    Ok(DensityMatrix::from_matrix_unchecked(u * &rho.m * u.adjoint()))
}

pub fn evolve_pure(s: &PureState, h: &HermitianOperator, dt: f64) -> Result<PureState> {
    same_dim(h.dim(), s.dim())?;
    apply_unitary(&propagator(h, dt)?, s)
}

pub fn evolve_density(
    rho: &DensityMatrix,
    h: &HermitianOperator,
    dt: f64,
) -> Result<DensityMatrix> {
    same_dim(h.dim(), rho.dim())?;
    conjugate(&propagator(h, dt)?, rho)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    BitFlip,
    PhaseFlip,
    AmplitudeDamping,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 3] = [
        ChannelKind::BitFlip,
        ChannelKind::PhaseFlip,
        ChannelKind::AmplitudeDamping,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::BitFlip => "bitflip",
            ChannelKind::PhaseFlip => "phaseflip",
            ChannelKind::AmplitudeDamping => "amplitude-damping",
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "bitflip" | "bit-flip" => Ok(ChannelKind::BitFlip),
            "phaseflip" | "phase-flip" => Ok(ChannelKind::PhaseFlip),
            "amplitude-damping" | "amplitudedamping" | "ad" => Ok(ChannelKind::AmplitudeDamping),
            other => Err(Error::InvalidParameter(format!(
                "unknown channel '{other}' (expected bitflip, phaseflip or amplitude-damping)"
            ))),
        }
    }
}

/// A set of Kraus operators `{E_m}` with `sum E_m^dagger E_m = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    kind: ChannelKind,
    p: f64,
    operators: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn dim(&self) -> usize {
        self.operators[0].nrows()
    }

    /// `max |sum E^dagger E - I|`, elementwise.
    pub fn completeness_error(&self) -> f64 {
        let d = self.dim();
        let sum = self
            .operators
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, e| acc + e.adjoint() * e);
        max_abs_diff(&sum, &identity(d))
    }
}

/// Single-qubit Kraus channel of the given kind and strength.
pub fn make_channel(kind: ChannelKind, p: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "channel parameter {p} outside [0, 1]"
        )));
    }
    let keep = c((1.0 - p).sqrt(), 0.0);
    let flip = c(p.sqrt(), 0.0);
    let operators = match kind {
        ChannelKind::BitFlip => vec![identity(2) * keep, pauli_x() * flip],
        ChannelKind::PhaseFlip => vec![identity(2) * keep, pauli_z() * flip],
        ChannelKind::AmplitudeDamping => vec![
            CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), keep]),
            CMatrix::from_row_slice(2, 2, &[c(0., 0.), flip, c(0., 0.), c(0., 0.)]),
        ],
    };
    let ch = KrausChannel { kind, p, operators };
    debug_assert!(ch.completeness_error() < COMPLETENESS_TOL);
    Ok(ch)
}

/// `sum_m E_m rho E_m^dagger`.
pub fn apply_channel(rho: &DensityMatrix, ch: &KrausChannel) -> Result<DensityMatrix> {
    same_dim(ch.dim(), rho.dim())?;
    let d = rho.dim();
    let out = ch
        .operators
        .iter()
        .fold(CMatrix::zeros(d, d), |acc, e| acc + e * &rho.m * e.adjoint());
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

/// A sequence of Kraus channels applied one after another.
///
/// One-qubit noise is a single stage. Two-qubit noise is the same
/// single-qubit channel on each qubit: `ch (x) I` followed by `I (x) ch`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeChannel {
    kind: ChannelKind,
    p: f64,
    stages: Vec<KrausChannel>,
}

impl CompositeChannel {
    /// Identical channels of strength `p` on each of `qubits` qubits.
    pub fn for_qubits(kind: ChannelKind, p: f64, qubits: usize) -> Result<Self> {
        let ch = make_channel(kind, p)?;
        match qubits {
            1 => Ok(Self {
                kind,
                p,
                stages: vec![ch],
            }),
            2 => Ok(lift_channel_two_qubit(&ch)),
            n => Err(Error::InvalidParameter(format!(
                "noise on {n} qubits is not supported"
            ))),
        }
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.stages[0].dim()
    }

    pub fn stages(&self) -> &[KrausChannel] {
        &self.stages
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let mut out = rho.clone();
        for stage in &self.stages {
            out = apply_channel(&out, stage)?;
        }
        Ok(out)
    }
}

/// Lifts a single-qubit channel to act identically on both qubits of a
/// four-level system.
pub fn lift_channel_two_qubit(ch: &KrausChannel) -> CompositeChannel {
    let id = identity(2);
    let on_first = KrausChannel {
        kind: ch.kind,
        p: ch.p,
        operators: ch.operators.iter().map(|e| kron(e, &id)).collect(),
    };
    let on_second = KrausChannel {
        kind: ch.kind,
        p: ch.p,
        operators: ch.operators.iter().map(|e| kron(&id, e)).collect(),
    };
    CompositeChannel {
        kind: ch.kind,
        p: ch.p,
        stages: vec![on_first, on_second],
    }
}

/// `(<sigma_x>, <sigma_y>, <sigma_z>)` of a single-qubit state.
pub fn bloch_coordinates(s: &PureState) -> Result<[f64; 3]> {
    same_dim(2, s.dim())?;
    bloch_from_density(&s.to_density())
}

/// Pauli expectations `Tr(rho sigma)` of a single-qubit density matrix.
pub fn bloch_from_density(rho: &DensityMatrix) -> Result<[f64; 3]> {
    same_dim(2, rho.dim())?;
    let expect = |p: CMatrix| (&rho.m * p).trace().re;
    Ok([expect(pauli_x()), expect(pauli_y()), expect(pauli_z())])
}

/// Removes the global phase: the first amplitude with modulus above 1e-9
/// becomes real and non-negative.
pub fn phase_fix(s: &PureState) -> PureState {
    match s.amps.iter().find(|a| a.norm() > PHASE_FIX_CUTOFF) {
        Some(a) => {
            let rot = a.conj() / a.norm();
            PureState::from_vector_unchecked(&s.amps * rot)
        }
        None => s.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn ket0() -> PureState {
        PureState::basis(2, 0).unwrap()
    }

    fn ket1() -> PureState {
        PureState::basis(2, 1).unwrap()
    }

    fn plus() -> PureState {
        PureState::new(vec![c(FRAC_1_SQRT_2, 0.), c(FRAC_1_SQRT_2, 0.)]).unwrap()
    }

    fn minus() -> PureState {
        PureState::new(vec![c(FRAC_1_SQRT_2, 0.), c(-FRAC_1_SQRT_2, 0.)]).unwrap()
    }

    fn herm(m: CMatrix) -> HermitianOperator {
        HermitianOperator::new(m).unwrap()
    }

    fn assert_mat_eq(a: &CMatrix, b: &CMatrix, tol: f64) {
        let d = max_abs_diff(a, b);
        assert!(d <= tol, "matrices differ by {d:e}\n{a}\n{b}");
    }

    #[test]
    fn fidelity_examples() {
        assert_eq!(fidelity(&ket0(), &ket0()).unwrap(), 1.0);
        assert_eq!(fidelity(&ket0(), &ket1()).unwrap(), 0.0);
        assert_abs_diff_eq!(fidelity(&ket0(), &plus()).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn fidelity_rejects_dimension_mismatch() {
        let two = PureState::basis(4, 0).unwrap();
        assert!(matches!(
            fidelity(&ket0(), &two),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn state_constructor_validates() {
        assert!(PureState::new(vec![c(1., 0.), c(1., 0.)]).is_err());
        assert!(PureState::new(vec![c(1., 0.), c(0., 0.), c(0., 0.)]).is_err());
        assert!(PureState::normalized(vec![c(0., 0.), c(0., 0.)]).is_err());
    }

    #[test]
    fn fidelity_mixed_examples() {
        assert_abs_diff_eq!(
            fidelity_mixed(&ket0().to_density(), &ket0()).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        assert_abs_diff_eq!(fidelity_mixed(&mixed, &ket0()).unwrap(), 0.5, epsilon = 1e-15);
        // E0 = sqrt(0.8) I, E1 = sqrt(0.2) X on |0><0| gives diag(0.8, 0.2).
        let flipped =
            apply_channel(&ket0().to_density(), &make_channel(ChannelKind::BitFlip, 0.2).unwrap())
                .unwrap();
        assert_abs_diff_eq!(fidelity_mixed(&flipped, &ket1()).unwrap(), 0.2, epsilon = 1e-14);
    }

    #[test]
    fn propagator_at_zero_time_is_identity() {
        let h = herm(pauli_z() + pauli_x());
        assert_mat_eq(&propagator(&h, 0.0).unwrap(), &identity(2), 0.0);
        assert!(propagator(&h, -1.0).is_err());
    }

    #[test]
    fn propagator_sigma_x_closed_form() {
        let t = PI / 5.0;
        let u = propagator(&herm(pauli_x()), t).unwrap();
        let expected = identity(2) * c(t.cos(), 0.) - pauli_x() * c(0., t.sin());
        assert_mat_eq(&u, &expected, 1e-12);
    }

    #[test]
    fn propagator_axis_angle_closed_form() {
        let t = PI / 5.0;
        let omega = 2f64.sqrt();
        let h = pauli_z() + pauli_x();
        let u = propagator(&herm(h.clone()), t).unwrap();
        let expected = identity(2) * c((omega * t).cos(), 0.)
            - h * c(0., (omega * t).sin() / omega);
        assert_mat_eq(&u, &expected, 1e-12);
    }

    #[test]
    fn evolve_pure_examples() {
        let h = herm(pauli_x());
        let half = evolve_pure(&ket0(), &h, PI / 2.0).unwrap();
        assert_abs_diff_eq!(half.amplitudes()[1].im, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&half, &ket1()).unwrap(), 1.0, epsilon = 1e-12);

        let fifth = evolve_pure(&ket0(), &h, PI / 5.0).unwrap();
        let expected = (PI / 5.0).sin().powi(2);
        assert_abs_diff_eq!(fidelity(&fifth, &ket1()).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, 0.3455, epsilon = 1e-4);

        let s = plus();
        assert_eq!(evolve_pure(&s, &h, 0.0).unwrap(), s);
    }

    #[test]
    fn evolve_density_examples() {
        let h = herm(pauli_x());
        let rho = evolve_density(&ket0().to_density(), &h, PI / 2.0).unwrap();
        assert_mat_eq(rho.matrix(), ket1().to_density().matrix(), 1e-12);

        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        let out = evolve_density(&mixed, &herm(pauli_z() * c(3., 0.) + pauli_x()), 1.7).unwrap();
        assert_mat_eq(out.matrix(), mixed.matrix(), 1e-12);

        let rho = evolve_density(&ket0().to_density(), &h, PI / 5.0).unwrap();
        assert_abs_diff_eq!(
            fidelity_mixed(&rho, &ket1()).unwrap(),
            (PI / 5.0).sin().powi(2),
            epsilon = 1e-12
        );
    }

    #[test]
    fn channel_examples() {
        let rho0 = ket0().to_density();
        let id = make_channel(ChannelKind::BitFlip, 0.0).unwrap();
        assert_mat_eq(apply_channel(&plus().to_density(), &id).unwrap().matrix(), plus().to_density().matrix(), 1e-15);

        let full = make_channel(ChannelKind::BitFlip, 1.0).unwrap();
        assert_mat_eq(apply_channel(&rho0, &full).unwrap().matrix(), ket1().to_density().matrix(), 1e-15);

        let p = 0.37;
        let ad = make_channel(ChannelKind::AmplitudeDamping, p).unwrap();
        let out = apply_channel(&ket1().to_density(), &ad).unwrap();
        let expected = ket1().to_density().matrix() * c(1. - p, 0.) + rho0.matrix() * c(p, 0.);
        assert_mat_eq(out.matrix(), &expected, 1e-15);

        assert!(make_channel(ChannelKind::PhaseFlip, 1.5).is_err());
        assert!(make_channel(ChannelKind::PhaseFlip, -0.1).is_err());
    }

    #[test]
    fn apply_channel_examples() {
        let half = make_channel(ChannelKind::BitFlip, 0.5).unwrap();
        let out = apply_channel(&ket0().to_density(), &half).unwrap();
        assert_mat_eq(out.matrix(), DensityMatrix::maximally_mixed(2).unwrap().matrix(), 1e-15);

        // Z|+> = |->.
        let pf = make_channel(ChannelKind::PhaseFlip, 0.3).unwrap();
        let out = apply_channel(&plus().to_density(), &pf).unwrap();
        let expected =
            plus().to_density().matrix() * c(0.7, 0.) + minus().to_density().matrix() * c(0.3, 0.);
        assert_mat_eq(out.matrix(), &expected, 1e-15);
    }

    #[test]
    fn channel_completeness_grid() {
        for kind in ChannelKind::ALL {
            for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let ch = make_channel(kind, p).unwrap();
                assert!(ch.completeness_error() < 1e-10, "{kind} p={p}");
                for stage in lift_channel_two_qubit(&ch).stages() {
                    assert!(stage.completeness_error() < 1e-10, "{kind} p={p} lifted");
                }
            }
        }
    }

    #[test]
    fn two_qubit_lift_examples() {
        let ket00 = PureState::basis(4, 0).unwrap().to_density();
        let ident = CompositeChannel::for_qubits(ChannelKind::AmplitudeDamping, 0.0, 2).unwrap();
        let rho = PureState::normalized(vec![c(1., 0.), c(0., 2.), c(-1., 0.5), c(0.3, 0.)])
            .unwrap()
            .to_density();
        assert_mat_eq(ident.apply(&rho).unwrap().matrix(), rho.matrix(), 1e-15);

        let both = CompositeChannel::for_qubits(ChannelKind::BitFlip, 1.0, 2).unwrap();
        let out = both.apply(&ket00).unwrap();
        assert_mat_eq(out.matrix(), PureState::basis(4, 3).unwrap().to_density().matrix(), 1e-15);

        let weak = CompositeChannel::for_qubits(ChannelKind::BitFlip, 0.1, 2).unwrap();
        let out = weak.apply(&ket00).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| out.matrix()[(i, i)].re).collect();
        for (got, want) in diag.iter().zip([0.81, 0.09, 0.09, 0.01]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(out.trace().re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn lifted_stages_commute() {
        let ch = make_channel(ChannelKind::AmplitudeDamping, 0.3).unwrap();
        let lifted = lift_channel_two_qubit(&ch);
        let rho = PureState::normalized(vec![c(0.2, 0.1), c(0.5, -0.3), c(-0.4, 0.), c(0.1, 0.7)])
            .unwrap()
            .to_density();
        let [a, b] = [&lifted.stages()[0], &lifted.stages()[1]];
        let ab = apply_channel(&apply_channel(&rho, a).unwrap(), b).unwrap();
        let ba = apply_channel(&apply_channel(&rho, b).unwrap(), a).unwrap();
        assert_mat_eq(ab.matrix(), ba.matrix(), 1e-14);
    }

    #[test]
    fn bloch_examples() {
        let close = |a: [f64; 3], b: [f64; 3]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
        assert!(close(bloch_coordinates(&ket0()).unwrap(), [0., 0., 1.]));
        assert!(close(bloch_coordinates(&ket1()).unwrap(), [0., 0., -1.]));
        assert!(close(bloch_coordinates(&plus()).unwrap(), [1., 0., 0.]));
        let y = PureState::new(vec![c(FRAC_1_SQRT_2, 0.), c(0., FRAC_1_SQRT_2)]).unwrap();
        assert!(close(bloch_coordinates(&y).unwrap(), [0., 1., 0.]));
        assert!(bloch_coordinates(&PureState::basis(4, 0).unwrap()).is_err());
    }

    #[test]
    fn phase_fix_examples() {
        assert_eq!(phase_fix(&ket0()), ket0());
        let rotated = ket0().with_global_phase(PI / 3.0);
        let fixed = phase_fix(&rotated);
        assert_abs_diff_eq!(fixed.amplitudes()[0].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fixed.amplitudes()[0].im, 0.0, epsilon = 1e-15);
        let i1 = PureState::new(vec![c(0., 0.), c(0., 1.)]).unwrap();
        let fixed = phase_fix(&i1);
        assert_abs_diff_eq!(fixed.amplitudes()[1].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fixed.amplitudes()[1].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn density_validation() {
        let bad_trace = identity(2);
        assert!(DensityMatrix::new(bad_trace).is_err());
        let negative = CMatrix::from_row_slice(2, 2, &[c(1.5, 0.), c(0., 0.), c(0., 0.), c(-0.5, 0.)]);
        assert!(DensityMatrix::new(negative).is_err());
        let non_herm = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.), c(0.1, 0.), c(0., 0.), c(0.5, 0.)]);
        assert!(DensityMatrix::new(non_herm).is_err());
        assert!(DensityMatrix::new(plus().to_density().matrix().clone()).is_ok());
    }

    #[test]
    fn to_pure_recovers_state_up_to_phase() {
        let s = PureState::normalized(vec![c(0.3, 0.4), c(-0.2, 0.8)]).unwrap();
        let back = s.to_density().to_pure().unwrap();
        assert_abs_diff_eq!(fidelity(&s, &back).unwrap(), 1.0, epsilon = 1e-12);
        assert!(DensityMatrix::maximally_mixed(2).unwrap().to_pure().is_err());
    }

    #[test]
    fn channel_kind_parses() {
        assert_eq!("bitflip".parse::<ChannelKind>().unwrap(), ChannelKind::BitFlip);
        assert_eq!("phase-flip".parse::<ChannelKind>().unwrap(), ChannelKind::PhaseFlip);
        assert_eq!(
            "amplitude-damping".parse::<ChannelKind>().unwrap(),
            ChannelKind::AmplitudeDamping
        );
        assert!("depolarizing".parse::<ChannelKind>().is_err());
    }
}
