//! Statevector and density-matrix gate engine.
//!
//! Qubit 0 is the most significant bit of the basis index. Two-qubit gate
//! matrices are indexed `2 * bit(first) + bit(second)`.

use nalgebra::{Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ONE, ZERO};
use crate::spin_model::{ComplexRows, DenseOperator, Pauli, PauliOperator, PauliString};
use crate::C64;

/// Maximum entry deviation of `U^dagger U` from identity accepted for gates.
pub const GATE_UNITARITY_TOL: f64 = 1e-12;
/// Norm tolerance for statevectors.
pub const NORM_TOL: f64 = 1e-10;
/// Largest register whose full unitary is materialized.
pub const MAX_UNITARY_QUBITS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Single { target: usize, matrix: Matrix2<C64> },
    Cnot { control: usize, target: usize },
    CPhase { phase: f64, control: usize, target: usize },
    TwoQubit { first: usize, second: usize, matrix: Matrix4<C64> },
}

fn max_norm<'a>(it: impl Iterator<Item = &'a C64>) -> f64 {
    it.map(|z| z.norm()).fold(0.0, f64::max)
}

fn m2(a: C64, b: C64, c: C64, d: C64) -> Matrix2<C64> {
    Matrix2::new(a, b, c, d)
}

impl Gate {
    pub fn single(target: usize, matrix: Matrix2<C64>) -> Self {
        Gate::Single { target, matrix }
    }

    pub fn h(target: usize) -> Self {
        let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::single(target, m2(r, r, r, -r))
    }

    pub fn x(target: usize) -> Self {
        Self::single(target, m2(ZERO, ONE, ONE, ZERO))
    }

    pub fn y(target: usize) -> Self {
        Self::single(target, m2(ZERO, -linalg::I, linalg::I, ZERO))
    }

    pub fn z(target: usize) -> Self {
        Self::single(target, m2(ONE, ZERO, ZERO, -ONE))
    }

    pub fn s(target: usize) -> Self {
        Self::single(target, m2(ONE, ZERO, ZERO, linalg::I))
    }

    pub fn s_dagger(target: usize) -> Self {
        Self::single(target, m2(ONE, ZERO, ZERO, -linalg::I))
    }

    /// `exp(-i θ Y / 2)`.
    pub fn ry(theta: f64, target: usize) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self::single(target, m2(C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0)))
    }

    /// `diag(1, e^{iφ})`.
    pub fn phase(phi: f64, target: usize) -> Self {
        Self::single(target, m2(ONE, ZERO, ZERO, C64::from_polar(1.0, phi)))
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }

    pub fn cphase(phase: f64, control: usize, target: usize) -> Self {
        Gate::CPhase { phase, control, target }
    }

    pub fn cz(control: usize, target: usize) -> Self {
        Self::cphase(std::f64::consts::PI, control, target)
    }

    pub fn two_qubit(first: usize, second: usize, matrix: Matrix4<C64>) -> Self {
        Gate::TwoQubit { first, second, matrix }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Single { target, .. } => vec![target],
            Gate::Cnot { control, target } | Gate::CPhase { control, target, .. } => vec![control, target],
            Gate::TwoQubit { first, second, .. } => vec![first, second],
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        !matches!(self, Gate::Single { .. })
    }

    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        let qubits = self.qubits();
        if let Some(&bad) = qubits.iter().find(|&&q| q >= num_qubits) {
            return Err(Error::IndexOutOfRange { index: bad, num_qubits });
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(Error::InvalidArgument(format!("gate acts twice on qubit {}", qubits[0])));
        }
        let err = match self {
            Gate::Single { matrix, .. } => max_norm((matrix.adjoint() * matrix - Matrix2::identity()).iter()),
            Gate::TwoQubit { matrix, .. } => max_norm((matrix.adjoint() * matrix - Matrix4::identity()).iter()),
            Gate::CPhase { phase, .. } if !phase.is_finite() => f64::INFINITY,
            _ => 0.0,
        };
        if err > GATE_UNITARITY_TOL {
            return Err(Error::InvalidArgument(format!("gate matrix not unitary (deviation {err:e})")));
        }
        Ok(())
    }

    pub fn inverse(&self) -> Gate {
        match self {
            Gate::Single { target, matrix } => Gate::Single { target: *target, matrix: matrix.adjoint() },
            Gate::Cnot { .. } => self.clone(),
            Gate::CPhase { phase, control, target } => Gate::CPhase { phase: -phase, control: *control, target: *target },
            Gate::TwoQubit { first, second, matrix } => {
                Gate::TwoQubit { first: *first, second: *second, matrix: matrix.adjoint() }
            }
        }
    }

    /// Apply in place to a `2^n` amplitude buffer. Indices are assumed valid.
    pub fn apply_in_place(&self, num_qubits: usize, amps: &mut [C64]) {
        let bit = |q: usize| 1usize << (num_qubits - 1 - q);
        match self {
            Gate::Single { target, matrix } => {
                let b = bit(*target);
                for i in (0..amps.len()).filter(|i| i & b == 0) {
                    let (a0, a1) = (amps[i], amps[i | b]);
                    amps[i] = matrix[(0, 0)] * a0 + matrix[(0, 1)] * a1;
                    amps[i | b] = matrix[(1, 0)] * a0 + matrix[(1, 1)] * a1;
                }
            }
            Gate::Cnot { control, target } => {
                let (bc, bt) = (bit(*control), bit(*target));
                for i in (0..amps.len()).filter(|i| i & bc != 0 && i & bt == 0) {
                    amps.swap(i, i | bt);
                }
            }
            Gate::CPhase { phase, control, target } => {
                let both = bit(*control) | bit(*target);
                let factor = C64::from_polar(1.0, *phase);
                for (i, a) in amps.iter_mut().enumerate() {
                    if i & both == both {
                        *a *= factor;
                    }
                }
            }
            Gate::TwoQubit { first, second, matrix } => {
                let (bf, bs) = (bit(*first), bit(*second));
                for i in (0..amps.len()).filter(|i| i & (bf | bs) == 0) {
                    let idx = [i, i | bs, i | bf, i | bf | bs];
                    let v = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
                    for (r, &target) in idx.iter().enumerate() {
                        amps[target] = (0..4).map(|c| matrix[(r, c)] * v[c]).sum();
                    }
                }
            }
        }
    }

    fn record(&self) -> GateRecord {
        match self {
            Gate::Single { target, matrix } => GateRecord {
                kind: GateKind::Single,
                targets: vec![*target],
                phase: None,
                matrix: Some(ComplexRows::from(&CMatrix::from_fn(2, 2, |i, j| matrix[(i, j)]))),
                stage: None,
            },
            Gate::Cnot { control, target } => GateRecord {
                kind: GateKind::Cnot,
                targets: vec![*control, *target],
                phase: None,
                matrix: None,
                stage: None,
            },
            Gate::CPhase { phase, control, target } => GateRecord {
                kind: GateKind::Cphase,
                targets: vec![*control, *target],
                phase: Some(*phase),
                matrix: None,
                stage: None,
            },
            Gate::TwoQubit { first, second, matrix } => GateRecord {
                kind: GateKind::TwoQubit,
                targets: vec![*first, *second],
                phase: None,
                matrix: Some(ComplexRows::from(&CMatrix::from_fn(4, 4, |i, j| matrix[(i, j)]))),
                stage: None,
            },
        }
    }

    fn from_record(r: &GateRecord) -> Result<Gate> {
        let want = |n: usize| -> Result<()> {
            if r.targets.len() != n {
                return Err(Error::InvalidArgument(format!("{:?} gate needs {n} targets", r.kind)));
            }
            Ok(())
        };
        let matrix = || -> Result<CMatrix> {
            r.matrix
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument(format!("{:?} gate needs a matrix", r.kind)))?
                .to_matrix()
        };
        Ok(match r.kind {
            GateKind::Single => {
                want(1)?;
                let m = matrix()?;
                if m.nrows() != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, found: m.nrows() });
                }
                Gate::Single { target: r.targets[0], matrix: Matrix2::from_fn(|i, j| m[(i, j)]) }
            }
            GateKind::Cnot => {
                want(2)?;
                Gate::Cnot { control: r.targets[0], target: r.targets[1] }
            }
            GateKind::Cphase => {
                want(2)?;
                let phase = r.phase.ok_or_else(|| Error::InvalidArgument("cphase gate needs a phase".into()))?;
                Gate::CPhase { phase, control: r.targets[0], target: r.targets[1] }
            }
            GateKind::TwoQubit => {
                want(2)?;
                let m = matrix()?;
                if m.nrows() != 4 {
                    return Err(Error::DimensionMismatch { expected: 4, found: m.nrows() });
                }
                Gate::TwoQubit { first: r.targets[0], second: r.targets[1], matrix: Matrix4::from_fn(|i, j| m[(i, j)]) }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    Single,
    Cnot,
    Cphase,
    TwoQubit,
}

/// Serialized gate. `stage` is only filled in by the chain compiler export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub phase: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub matrix: Option<ComplexRows>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stage: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitFile {
    pub num_qubits: usize,
    pub gates: Vec<GateRecord>,
}

/// Ordered gate list on a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self { num_qubits, gates: Vec::new() }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.num_qubits)?;
        self.gates.push(gate);
        Ok(self)
    }

    /// Append every gate of `other` after the gates of `self`.
    pub fn extend(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.num_qubits != self.num_qubits {
            return Err(Error::DimensionMismatch { expected: self.num_qubits, found: other.num_qubits });
        }
        self.gates.extend(other.gates.iter().cloned());
        Ok(self)
    }

    pub fn inverse(&self) -> Circuit {
        Circuit { num_qubits: self.num_qubits, gates: self.gates.iter().rev().map(Gate::inverse).collect() }
    }

    pub fn cnot_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::Cnot { .. })).count()
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    pub fn to_records(&self) -> Vec<GateRecord> {
        self.gates.iter().map(Gate::record).collect()
    }

    pub fn to_file(&self) -> CircuitFile {
        CircuitFile { num_qubits: self.num_qubits, gates: self.to_records() }
    }

    pub fn from_file(file: &CircuitFile) -> Result<Circuit> {
        let mut c = Circuit::new(file.num_qubits);
        for r in &file.gates {
            c.push(Gate::from_record(r)?)?;
        }
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Circuit> {
        Self::from_file(&serde_json::from_str(s)?)
    }
}

/// Normalized pure state of `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::InvalidArgument(format!("basis index {index} out of range for {num_qubits} qubits")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { num_qubits, amps })
    }

    pub fn zero(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0).expect("index 0 always valid")
    }

    /// Validates length and unit norm.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("amplitude count {dim} is not a power of two")));
        }
        let s = Self { num_qubits: dim.trailing_zeros() as usize, amps };
        let norm = s.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NonPhysical(format!("state norm {norm} differs from 1")));
        }
        Ok(s)
    }

    /// Rescale to unit norm; fails on the zero vector.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NonPhysical("cannot normalize a zero vector".into()));
        }
        Self::from_amplitudes(amps.into_iter().map(|a| a / norm).collect())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|<self|other>|^2`.
    pub fn overlap(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        gate.apply_in_place(self.num_qubits, &mut self.amps);
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        check_dim(self.num_qubits, circuit.num_qubits)?;
        for g in &circuit.gates {
            g.apply_in_place(self.num_qubits, &mut self.amps);
        }
        Ok(())
    }

    /// `<psi|P|psi>` for a single-site Pauli.
    pub fn site_expectation(&self, site: usize, axis: Pauli) -> Result<f64> {
        if site >= self.num_qubits {
            return Err(Error::IndexOutOfRange { index: site, num_qubits: self.num_qubits });
        }
        let p = PauliString::with_sites(self.num_qubits, &[(site, axis)]);
        let op = PauliOperator::from_terms(self.num_qubits, [(1.0, p)])?;
        self.expectation(&op)
    }

    pub fn to_dump(&self) -> StateDump {
        StateDump { num_qubits: self.num_qubits, amplitudes: self.amps.iter().map(|a| [a.re, a.im]).collect() }
    }
}

/// JSON form of a statevector: `{"L": n, "amplitudes": [[re, im], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDump {
    #[serde(rename = "L")]
    pub num_qubits: usize,
    pub amplitudes: Vec<[f64; 2]>,
}

impl StateDump {
    pub fn to_state(&self) -> Result<StateVector> {
        let s = StateVector::from_amplitudes(self.amplitudes.iter().map(|p| C64::new(p[0], p[1])).collect())?;
        check_dim(self.num_qubits, s.num_qubits)?;
        Ok(s)
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

/// Tolerances checked on construction.
pub const DENSITY_HERMITIAN_TOL: f64 = 1e-10;
pub const DENSITY_TRACE_TOL: f64 = 1e-10;
pub const DENSITY_PSD_TOL: f64 = -1e-8;

impl DensityMatrix {
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let (r, c) = matrix.shape();
        if r != c || r == 0 || !r.is_power_of_two() {
            return Err(Error::NonPhysical(format!("density matrix shape {r}x{c} is invalid")));
        }
        let herm = linalg::hermiticity_error(&matrix);
        if herm > DENSITY_HERMITIAN_TOL {
            return Err(Error::NonPhysical(format!("not hermitian (deviation {herm:e})")));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > DENSITY_TRACE_TOL {
            return Err(Error::NonPhysical(format!("trace {tr} differs from 1")));
        }
        let min = linalg::eigh(&matrix).0.first().copied().unwrap_or(0.0);
        if min < DENSITY_PSD_TOL {
            return Err(Error::NonPhysical(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        Self { matrix: linalg::identity(dim).map(|z| z / dim as f64) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigh(&self.matrix).0
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `U rho U^dagger` for the unitary of `circuit`.
    pub fn evolve(&self, circuit: &Circuit) -> Result<DensityMatrix> {
        check_dim(self.num_qubits(), circuit.num_qubits())?;
        let half = apply_to_columns(circuit, &self.matrix);
        let full = apply_to_columns(circuit, &half.adjoint());
        Ok(Self { matrix: full })
    }

    pub fn site_expectation(&self, site: usize, axis: Pauli) -> Result<f64> {
        let n = self.num_qubits();
        if site >= n {
            return Err(Error::IndexOutOfRange { index: site, num_qubits: n });
        }
        let p = PauliString::with_sites(n, &[(site, axis)]);
        self.expectation(&PauliOperator::from_terms(n, [(1.0, p)])?)
    }

    /// Reduced state of a single qubit.
    pub fn reduced(&self, site: usize) -> Result<CMatrix> {
        let n = self.num_qubits();
        if site >= n {
            return Err(Error::IndexOutOfRange { index: site, num_qubits: n });
        }
        let b = 1usize << (n - 1 - site);
        let mut out = CMatrix::zeros(2, 2);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if i & !b == j & !b {
                    out[(usize::from(i & b != 0), usize::from(j & b != 0))] += self.matrix[(i, j)];
                }
            }
        }
        Ok(out)
    }
}

fn apply_to_columns(circuit: &Circuit, m: &CMatrix) -> CMatrix {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let mut buf: Vec<C64> = col.iter().copied().collect();
        for g in circuit.gates() {
            g.apply_in_place(circuit.num_qubits(), &mut buf);
        }
        col.iter_mut().zip(buf).for_each(|(d, s)| *d = s);
    }
    out
}

/// Functional form of [`StateVector::apply_gate`].
pub fn apply_gate(state: &StateVector, gate: &Gate) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply_gate(gate)?;
    Ok(out)
}

/// Gates applied left to right.
pub fn apply_circuit(state: &StateVector, circuit: &Circuit) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply_circuit(circuit)?;
    Ok(out)
}

/// Full `2^n x 2^n` unitary of a circuit (column `j` is the image of `|j>`).
pub fn unitary_of_circuit(circuit: &Circuit) -> Result<DenseOperator> {
    let n = circuit.num_qubits();
    if n > MAX_UNITARY_QUBITS {
        return Err(Error::ResourceLimit(format!("{n} qubits exceeds the unitary limit of {MAX_UNITARY_QUBITS}")));
    }
    DenseOperator::from_matrix(apply_to_columns(circuit, &linalg::identity(1 << n)))
}

/// States that can report Pauli-sum expectation values.
pub trait Expectation {
    fn expectation(&self, obs: &PauliOperator) -> Result<f64>;
}

impl Expectation for StateVector {
    fn expectation(&self, obs: &PauliOperator) -> Result<f64> {
        check_dim(self.num_qubits, obs.num_qubits())?;
        let image = obs.apply(&self.amps)?;
        let v: C64 = self.amps.iter().zip(&image).map(|(a, b)| a.conj() * b).sum();
        Ok(v.re)
    }
}

impl Expectation for DensityMatrix {
    fn expectation(&self, obs: &PauliOperator) -> Result<f64> {
        check_dim(self.num_qubits(), obs.num_qubits())?;
        let mut total = ZERO;
        for t in obs.terms() {
            // tr(rho P) = Σ_j phase_j rho[j, P(j)]
            let partial: C64 = (0..self.dim())
                .map(|j| {
                    let (image, phase) = t.axes.apply_to_index(j);
                    phase * self.matrix[(j, image)]
                })
                .sum();
            total += partial * t.coeff;
        }
        Ok(total.re)
    }
}

pub fn expectation<S: Expectation>(state: &S, obs: &PauliOperator) -> Result<f64> {
    state.expectation(obs)
}

/// `<target|rho|target>`, clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, target: &StateVector) -> Result<f64> {
    check_dim(rho.dim(), target.dim())?;
    let v = &target.amps;
    let mut acc = ZERO;
    for i in 0..v.len() {
        for j in 0..v.len() {
            acc += v[i].conj() * rho.matrix[(i, j)] * v[j];
        }
    }
    Ok(acc.re.clamp(0.0, 1.0))
}

pub fn pure_to_density(state: &StateVector) -> DensityMatrix {
    let v = &state.amps;
    DensityMatrix { matrix: CMatrix::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj()) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, max_abs_diff};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_unitary(dim: usize, rng: &mut impl Rng) -> CMatrix {
        let m = CMatrix::from_fn(dim, dim, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        m.qr().q()
    }

    fn random_gate(n: usize, rng: &mut impl Rng) -> Gate {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n);
        while b == a {
            b = rng.random_range(0..n);
        }
        match rng.random_range(0..4) {
            0 => {
                let u = random_unitary(2, rng);
                Gate::single(a, Matrix2::from_fn(|i, j| u[(i, j)]))
            }
            1 => Gate::cnot(a, b),
            2 => Gate::cphase(rng.random::<f64>() * 6.0, a, b),
            _ => {
                let u = random_unitary(4, rng);
                Gate::two_qubit(a, b, Matrix4::from_fn(|i, j| u[(i, j)]))
            }
        }
    }

    fn random_circuit(n: usize, len: usize, rng: &mut impl Rng) -> Circuit {
        let mut c = Circuit::new(n);
        for _ in 0..len {
            c.push(random_gate(n, rng)).unwrap();
        }
        c
    }

    fn random_state(n: usize, rng: &mut impl Rng) -> StateVector {
        StateVector::normalized((0..1 << n).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect())
            .unwrap()
    }

    /// Oracle: embed a gate as an explicit Kronecker / permutation construction.
    fn embedded(gate: &Gate, n: usize) -> CMatrix {
        let dim = 1 << n;
        let local: CMatrix = match gate {
            Gate::Single { matrix, .. } => CMatrix::from_fn(2, 2, |i, j| matrix[(i, j)]),
            Gate::Cnot { .. } => CMatrix::from_fn(4, 4, |i, j| {
                let image = if i >= 2 { i ^ 1 } else { i };
                if image == j { ONE } else { ZERO }
            }),
            Gate::CPhase { phase, .. } => {
                let mut m = linalg::identity(4);
                m[(3, 3)] = C64::from_polar(1.0, *phase);
                m
            }
            Gate::TwoQubit { matrix, .. } => CMatrix::from_fn(4, 4, |i, j| matrix[(i, j)]),
        };
        let qs = gate.qubits();
        if qs.len() == 1 {
            let mut m = linalg::identity(1);
            for q in 0..n {
                m = if q == qs[0] { kron(&m, &local) } else { kron(&m, &linalg::identity(2)) };
            }
            return m;
        }
        // Two-qubit: sum over matrix elements of |a b><c d| placed on the pair.
        let (qa, qb) = (qs[0], qs[1]);
        let mut m = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            let ba = (col >> (n - 1 - qa)) & 1;
            let bb = (col >> (n - 1 - qb)) & 1;
            let lc = 2 * ba + bb;
            for lr in 0..4 {
                let mut row = col;
                row = (row & !(1 << (n - 1 - qa))) | ((lr >> 1) << (n - 1 - qa));
                row = (row & !(1 << (n - 1 - qb))) | ((lr & 1) << (n - 1 - qb));
                m[(row, col)] += local[(lr, lc)];
            }
        }
        m
    }

    #[test]
    fn cnot_truth_table() {
        let out = apply_gate(&StateVector::basis(2, 0b10).unwrap(), &Gate::cnot(0, 1)).unwrap();
        assert_eq!(out, StateVector::basis(2, 0b11).unwrap());
        let u = unitary_of_circuit(Circuit::new(2).push(Gate::cnot(0, 1)).unwrap()).unwrap();
        let want = CMatrix::from_fn(4, 4, |i, j| if [0, 1, 3, 2][j] == i { ONE } else { ZERO });
        assert_eq!(u.matrix(), &want);
    }

    #[test]
    fn hadamard_on_zero() {
        let out = apply_gate(&StateVector::zero(1), &Gate::h(0)).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out.amplitudes()[0].re - r).abs() < 1e-15 && (out.amplitudes()[1].re - r).abs() < 1e-15);
    }

    #[test]
    fn bad_indices_rejected() {
        let mut c = Circuit::new(2);
        assert!(matches!(c.push(Gate::x(2)), Err(Error::IndexOutOfRange { index: 2, .. })));
        assert!(c.push(Gate::cnot(1, 1)).is_err());
        let bogus = Matrix2::new(ONE, ONE, ZERO, ONE);
        assert!(c.push(Gate::single(0, bogus)).is_err());
    }

    #[test]
    fn empty_circuit_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_state(3, &mut rng);
        assert_eq!(apply_circuit(&s, &Circuit::new(3)).unwrap(), s);
        let u = unitary_of_circuit(&Circuit::new(3)).unwrap();
        assert_eq!(u.matrix(), &linalg::identity(8));
    }

    #[test]
    fn gate_sequence_matches_embedded_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let c = random_circuit(3, 12, &mut rng);
            let mut product = linalg::identity(8);
            for g in c.gates() {
                product = embedded(g, 3) * product;
            }
            let u = unitary_of_circuit(&c).unwrap();
            assert!(max_abs_diff(u.matrix(), &product) < 1e-12);
            let s = random_state(3, &mut rng);
            let out = apply_circuit(&s, &c).unwrap();
            let direct = &product * nalgebra::DVector::from_column_slice(s.amplitudes());
            let diff = out.amplitudes().iter().zip(direct.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-12);
        }
    }

    #[test]
    fn norm_preserved_over_random_circuits() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..1000 {
            let n = rng.random_range(2..5);
            let c = random_circuit(n, 10, &mut rng);
            let out = apply_circuit(&random_state(n, &mut rng), &c).unwrap();
            assert!((out.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn concatenation_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (c1, c2) = (random_circuit(3, 8, &mut rng), random_circuit(3, 8, &mut rng));
            let s = random_state(3, &mut rng);
            let mut joined = c1.clone();
            joined.extend(&c2).unwrap();
            let a = apply_circuit(&s, &joined).unwrap();
            let b = apply_circuit(&apply_circuit(&s, &c1).unwrap(), &c2).unwrap();
            assert!(a.amplitudes().iter().zip(b.amplitudes()).all(|(x, y)| (x - y).norm() < 1e-12));
            let back = apply_circuit(&a, &joined.inverse()).unwrap();
            assert!((back.overlap(&s).unwrap() - 1.0).abs() < 1e-10);
            let u = unitary_of_circuit(&joined).unwrap();
            assert!(linalg::unitarity_error(u.matrix()) < 1e-10);
        }
    }

    #[test]
    fn expectation_examples() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let psi2 = StateVector::from_amplitudes(vec![ZERO, C64::new(r, 0.0), C64::new(r, 0.0), ZERO]).unwrap();
        let xx = PauliOperator::from_terms(2, [(1.0, "XX".parse().unwrap())]).unwrap();
        assert!((psi2.expectation(&xx).unwrap() - 1.0).abs() < 1e-12);
        let z_avg = PauliOperator::from_terms(2, [(0.5, "ZI".parse().unwrap()), (0.5, "IZ".parse().unwrap())]).unwrap();
        assert_eq!(StateVector::zero(2).expectation(&z_avg).unwrap(), 1.0);
        let w = std::f64::consts::FRAC_PI_4;
        let psi1 = StateVector::from_amplitudes(vec![C64::new((w / 2.0).cos(), 0.0), ZERO, ZERO, C64::new((w / 2.0).sin(), 0.0)]).unwrap();
        assert!((psi1.expectation(&xx).unwrap() - w.sin()).abs() < 1e-12);
        assert!((pure_to_density(&psi1).expectation(&xx).unwrap() - w.sin()).abs() < 1e-12);
        assert!(matches!(StateVector::zero(3).expectation(&xx), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn expectation_is_linear_in_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let labels = ["XX", "YZ", "ZI", "IY", "XY"];
        for _ in 0..50 {
            let s = random_state(2, &mut rng);
            let rho = pure_to_density(&s);
            let (p, q) = (labels[rng.random_range(0..5)], labels[rng.random_range(0..5)]);
            let (a, b) = (rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0);
            let op = |c: f64, l: &str| PauliOperator::from_terms(2, [(c, l.parse().unwrap())]).unwrap();
            let combined = op(a, p).plus(&op(b, q)).unwrap();
            let lhs = s.expectation(&combined).unwrap();
            let rhs = a * s.expectation(&op(1.0, p)).unwrap() + b * s.expectation(&op(1.0, q)).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
            assert!((rho.expectation(&combined).unwrap() - lhs).abs() < 1e-12);
            assert!(lhs.abs() <= combined.coefficient_l1() + 1e-12);
        }
    }

    #[test]
    fn fidelity_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_state(2, &mut rng);
        assert!((fidelity(&pure_to_density(&s), &s).unwrap() - 1.0).abs() < 1e-12);
        assert!((fidelity(&DensityMatrix::maximally_mixed(2), &s).unwrap() - 0.25).abs() < 1e-12);
        // Werner mixture with λ = (4F - 1)/3 hits fidelity F against its Bell state.
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let phi = StateVector::from_amplitudes(vec![C64::new(r, 0.0), ZERO, ZERO, C64::new(r, 0.0)]).unwrap();
        let lambda = (4.0 * 0.97 - 1.0) / 3.0;
        let m = pure_to_density(&phi).matrix().map(|z| z * lambda) + linalg::identity(4).map(|z| z * (1.0 - lambda) / 4.0);
        let rho = DensityMatrix::from_matrix(m).unwrap();
        assert!((fidelity(&rho, &phi).unwrap() - 0.97).abs() < 1e-12);
    }

    #[test]
    fn pure_to_density_examples() {
        let rho = pure_to_density(&StateVector::zero(1));
        assert_eq!(rho.matrix()[(0, 0)], ONE);
        assert_eq!(rho.matrix()[(1, 1)], ZERO);
        let plus = apply_gate(&StateVector::zero(1), &Gate::h(0)).unwrap();
        assert!(pure_to_density(&plus).matrix().iter().all(|z| (z.re - 0.5).abs() < 1e-15));
        let w: f64 = 0.8;
        let (c, s) = ((w / 2.0).cos(), (w / 2.0).sin());
        let psi1 = StateVector::from_amplitudes(vec![C64::new(c, 0.0), ZERO, ZERO, C64::new(s, 0.0)]).unwrap();
        let m = pure_to_density(&psi1);
        assert!((m.matrix()[(0, 0)].re - c * c).abs() < 1e-15);
        assert!((m.matrix()[(3, 3)].re - s * s).abs() < 1e-15);
        assert!((m.matrix()[(0, 3)].re - c * s).abs() < 1e-15);
        assert!(DensityMatrix::from_matrix(m.matrix().clone()).is_ok());
    }

    #[test]
    fn density_constructor_rejects_non_physical() {
        let mut m = linalg::identity(2).map(|z| z * 0.5);
        m[(0, 0)] = C64::new(1.2, 0.0);
        m[(1, 1)] = C64::new(-0.2, 0.0);
        assert!(DensityMatrix::from_matrix(m).is_err());
        assert!(DensityMatrix::from_matrix(linalg::identity(2)).is_err());
    }

    #[test]
    fn density_evolution_matches_pure() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = random_circuit(3, 10, &mut rng);
        let s = random_state(3, &mut rng);
        let via_rho = pure_to_density(&s).evolve(&c).unwrap();
        let via_psi = pure_to_density(&apply_circuit(&s, &c).unwrap());
        assert!(max_abs_diff(via_rho.matrix(), via_psi.matrix()) < 1e-12);
    }

    #[test]
    fn reduced_state_and_site_expectation() {
        let s = apply_gate(&StateVector::zero(2), &Gate::x(1)).unwrap();
        assert_eq!(s.site_expectation(1, Pauli::Z).unwrap(), -1.0);
        assert_eq!(s.site_expectation(0, Pauli::Z).unwrap(), 1.0);
        let red = pure_to_density(&s).reduced(1).unwrap();
        assert_eq!(red[(1, 1)], ONE);
        assert_eq!(pure_to_density(&s).site_expectation(1, Pauli::Z).unwrap(), -1.0);
    }

    #[test]
    fn circuit_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = random_circuit(3, 15, &mut rng);
        let back = Circuit::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
        let dump = StateVector::zero(2).to_dump();
        assert_eq!(dump.to_state().unwrap(), StateVector::zero(2));
    }
}
