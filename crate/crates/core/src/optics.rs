//! Photonic two-qubit simulation at the two-photon Fock level.
//!
//! Qubits are polarizations (`H = |0>`, `V = |1>`) of one photon in spatial
//! mode A (control) and one in spatial mode B (target). Partial beam splitters
//! deposit reflected light in tracked loss modes so every optical element is
//! unitary on the eight-mode space.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circuit::{fidelity, DensityMatrix, StateVector};
use crate::disentangler::{bell_input, bell_reduced_circuit, eigenstate, BellState, EigenIndex};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ONE, ZERO};
use crate::spin_model::{mixing_angle, CouplingParams};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Spatial {
    A,
    B,
    LossA,
    LossB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn from_bit(bit: usize) -> Self {
        if bit == 0 {
            Polarization::H
        } else {
            Polarization::V
        }
    }

    fn bit(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mode {
    pub spatial: Spatial,
    pub pol: Polarization,
}

pub const NUM_MODES: usize = 8;

impl Mode {
    pub fn new(spatial: Spatial, pol: Polarization) -> Self {
        Self { spatial, pol }
    }

    pub fn index(self) -> usize {
        2 * self.spatial as usize + self.pol.bit()
    }

    pub fn from_index(i: usize) -> Self {
        let spatial = [Spatial::A, Spatial::B, Spatial::LossA, Spatial::LossB][i / 2];
        Self { spatial, pol: Polarization::from_bit(i % 2) }
    }
}

/// Two-photon state as normalized Fock amplitudes keyed by the sorted pair of
/// occupied mode indices (`(m, m)` is double occupation).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhotonicState {
    amps: BTreeMap<(usize, usize), C64>,
}

impl PhotonicState {
    /// `a†_first a†_second |vac>`, normalized.
    pub fn two_photons(first: Mode, second: Mode) -> Self {
        let (i, j) = (first.index().min(second.index()), first.index().max(second.index()));
        let mut amps = BTreeMap::new();
        amps.insert((i, j), ONE);
        Self { amps }
    }

    /// Polarization-encoded logical state `|c t>`.
    pub fn logical(control: usize, target: usize) -> Self {
        Self::two_photons(
            Mode::new(Spatial::A, Polarization::from_bit(control)),
            Mode::new(Spatial::B, Polarization::from_bit(target)),
        )
    }

    pub fn from_amplitudes(amps: BTreeMap<(usize, usize), C64>) -> Result<Self> {
        for &(i, j) in amps.keys() {
            if i > j || j >= NUM_MODES {
                return Err(Error::InvalidArgument(format!("malformed Fock occupation ({i}, {j})")));
            }
        }
        let s = Self { amps };
        if s.norm_sqr() > 1.0 + 1e-12 {
            return Err(Error::NonPhysical(format!("photonic state norm^2 {} exceeds 1", s.norm_sqr())));
        }
        Ok(s)
    }

    pub fn amplitude(&self, a: Mode, b: Mode) -> C64 {
        let key = (a.index().min(b.index()), a.index().max(b.index()));
        self.amps.get(&key).copied().unwrap_or(ZERO)
    }

    pub fn amplitudes(&self) -> &BTreeMap<(usize, usize), C64> {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    /// Apply the single-photon mode map `a†_m -> Σ_n u[(n, m)] a†_n`.
    pub fn transform(&self, u: &CMatrix) -> PhotonicState {
        // Work with creation-polynomial coefficients: |m m> = (a†_m)^2 / √2.
        let mut poly: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for (&(i, j), &amp) in &self.amps {
            let c = if i == j { amp / 2f64.sqrt() } else { amp };
            for n1 in 0..NUM_MODES {
                let u1 = u[(n1, i)];
                if u1 == ZERO {
                    continue;
                }
                for n2 in 0..NUM_MODES {
                    let u2 = u[(n2, j)];
                    if u2 == ZERO {
                        continue;
                    }
                    *poly.entry((n1.min(n2), n1.max(n2))).or_insert(ZERO) += c * u1 * u2;
                }
            }
        }
        let amps = poly
            .into_iter()
            .map(|((i, j), c)| ((i, j), if i == j { c * 2f64.sqrt() } else { c }))
            .filter(|(_, a)| a.norm() > 1e-15)
            .collect();
        PhotonicState { amps }
    }

    /// Keep only one photon in A and one in B.
    pub fn postselect_coincidence(&self) -> PhotonicState {
        let amps = self
            .amps
            .iter()
            .filter(|(&(i, j), _)| Mode::from_index(i).spatial == Spatial::A && Mode::from_index(j).spatial == Spatial::B)
            .map(|(&k, &v)| (k, v))
            .collect();
        PhotonicState { amps }
    }

    /// Logical amplitudes of the coincidence component, indexed `2c + t`.
    pub fn logical_amplitudes(&self) -> [C64; 4] {
        let mut out = [ZERO; 4];
        for (c, t) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            out[2 * c + t] = self.amplitude(
                Mode::new(Spatial::A, Polarization::from_bit(c)),
                Mode::new(Spatial::B, Polarization::from_bit(t)),
            );
        }
        out
    }
}

/// Polarization-dependent beam splitter, given by intensity transmissions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdbsSpec {
    pub t_h: f64,
    pub t_v: f64,
}

impl PdbsSpec {
    pub fn new(t_h: f64, t_v: f64) -> Result<Self> {
        for t in [t_h, t_v] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidArgument(format!("transmission {t} outside [0, 1]")));
            }
        }
        Ok(Self { t_h, t_v })
    }

    /// Interfering element: H fully transmitted, V one third.
    pub fn main() -> Self {
        Self { t_h: 1.0, t_v: 1.0 / 3.0 }
    }

    /// Opposite splitting ratio, balancing the H amplitude.
    pub fn compensating() -> Self {
        Self { t_h: 1.0 / 3.0, t_v: 1.0 }
    }

    fn transmission(&self, pol: Polarization) -> f64 {
        match pol {
            Polarization::H => self.t_h,
            Polarization::V => self.t_v,
        }
    }
}

/// Mode matrix of a beam splitter between spatial ports `p` and `q`:
/// transmission `√T`, reflection `i√(1-T)`.
pub fn beam_splitter_matrix(spec: &PdbsSpec, p: Spatial, q: Spatial) -> CMatrix {
    let mut u = linalg::identity(NUM_MODES);
    for pol in [Polarization::H, Polarization::V] {
        let t = spec.transmission(pol);
        let (tt, r) = (C64::new(t.sqrt(), 0.0), C64::new(0.0, (1.0 - t).sqrt()));
        let (a, b) = (Mode::new(p, pol).index(), Mode::new(q, pol).index());
        u[(a, a)] = tt;
        u[(b, b)] = tt;
        u[(b, a)] = r;
        u[(a, b)] = r;
    }
    u
}

/// Half-wave plate at angle `theta` (radians) on one spatial mode.
pub fn half_wave_plate_matrix(theta: f64, spatial: Spatial) -> CMatrix {
    let (s, c) = (2.0 * theta).sin_cos();
    let mut u = linalg::identity(NUM_MODES);
    let (h, v) = (Mode::new(spatial, Polarization::H).index(), Mode::new(spatial, Polarization::V).index());
    u[(h, h)] = C64::new(c, 0.0);
    u[(v, h)] = C64::new(s, 0.0);
    u[(h, v)] = C64::new(s, 0.0);
    u[(v, v)] = C64::new(-c, 0.0);
    u
}

/// The main PDBS acting between A and B.
pub fn pdbs_transform(state: &PhotonicState, spec: &PdbsSpec) -> PhotonicState {
    state.transform(&beam_splitter_matrix(spec, Spatial::A, Spatial::B))
}

/// Optical elements of the CNOT, in order of traversal.
pub fn cnot_elements() -> Vec<CMatrix> {
    let hwp = std::f64::consts::PI / 8.0;
    vec![
        half_wave_plate_matrix(hwp, Spatial::B),
        beam_splitter_matrix(&PdbsSpec::main(), Spatial::A, Spatial::B),
        beam_splitter_matrix(&PdbsSpec::compensating(), Spatial::A, Spatial::LossA),
        beam_splitter_matrix(&PdbsSpec::compensating(), Spatial::B, Spatial::LossB),
        half_wave_plate_matrix(hwp, Spatial::B),
    ]
}

/// Logical Kraus operator of the postselected optical CNOT.
pub fn pdbs_cnot_kraus() -> CMatrix {
    let elements = cnot_elements();
    let mut k = CMatrix::zeros(4, 4);
    for input in 0..4 {
        let mut s = PhotonicState::logical(input >> 1, input & 1);
        for u in &elements {
            s = s.transform(u);
        }
        for (row, amp) in s.postselect_coincidence().logical_amplitudes().into_iter().enumerate() {
            k[(row, input)] = amp;
        }
    }
    k
}

/// Postselected output state and coincidence probability.
pub fn pdbs_cnot(input: &DensityMatrix) -> Result<(DensityMatrix, f64)> {
    if input.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: input.dim() });
    }
    let k = pdbs_cnot_kraus();
    let out = &k * input.matrix() * k.adjoint();
    let p = out.trace().re;
    if p <= 0.0 {
        return Err(Error::NonPhysical("postselection probability vanished".into()));
    }
    Ok((DensityMatrix::from_matrix(out.map(|z| z / p))?, p))
}

/// Linear map on `d x d` operators.
pub trait Channel {
    fn dim(&self) -> usize;
    fn apply(&self, op: &CMatrix) -> CMatrix;

    fn apply_density(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::from_matrix(self.apply(rho.matrix()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryChannel(pub CMatrix);

impl Channel for UnitaryChannel {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, op: &CMatrix) -> CMatrix {
        &self.0 * op * self.0.adjoint()
    }
}

/// Postselected optical CNOT renormalized by its (input-independent) success
/// probability.
#[derive(Debug, Clone, PartialEq)]
pub struct PostselectedCnot {
    kraus: CMatrix,
    success: f64,
}

impl PostselectedCnot {
    pub fn new() -> Self {
        let kraus = pdbs_cnot_kraus();
        let success = kraus.column(0).norm_squared();
        Self { kraus, success }
    }

    pub fn kraus(&self) -> &CMatrix {
        &self.kraus
    }

    pub fn success_probability(&self) -> f64 {
        self.success
    }
}

impl Default for PostselectedCnot {
    fn default() -> Self {
        Self::new()
    }
}

impl Channel for PostselectedCnot {
    fn dim(&self) -> usize {
        4
    }
    fn apply(&self, op: &CMatrix) -> CMatrix {
        (&self.kraus * op * self.kraus.adjoint()).map(|z| z / self.success)
    }
}

/// `μ · (U ρ U†) + (1 - μ) · tr(ρ) I/d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepolarizedUnitary {
    unitary: CMatrix,
    mu: f64,
}

impl DepolarizedUnitary {
    pub fn new(unitary: CMatrix, mu: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::InvalidArgument(format!("mixing weight {mu} outside [0, 1]")));
        }
        Ok(Self { unitary, mu })
    }

    /// Weight reproducing entanglement fidelity `fp` for a `d`-dimensional gate.
    pub fn from_process_fidelity(unitary: CMatrix, fp: f64) -> Result<Self> {
        let d2 = (unitary.nrows() * unitary.nrows()) as f64;
        if !(1.0 / d2..=1.0).contains(&fp) {
            return Err(Error::InvalidArgument(format!("process fidelity {fp} outside [1/{d2}, 1]")));
        }
        Self::new(unitary, (fp - 1.0 / d2) / (1.0 - 1.0 / d2))
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

impl Channel for DepolarizedUnitary {
    fn dim(&self) -> usize {
        self.unitary.nrows()
    }
    fn apply(&self, op: &CMatrix) -> CMatrix {
        let d = self.dim() as f64;
        let ideal = &self.unitary * op * self.unitary.adjoint();
        let mixed = linalg::identity(self.dim()).map(|z| z * op.trace() / d);
        ideal.map(|z| z * self.mu) + mixed.map(|z| z * (1.0 - self.mu))
    }
}

/// Normalized Choi matrix `(1/d) Σ_ij |i><j| ⊗ E(|i><j|)`.
pub fn choi<C: Channel + ?Sized>(channel: &C) -> CMatrix {
    let d = channel.dim();
    let mut out = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let mut e = CMatrix::zeros(d, d);
            e[(i, j)] = ONE;
            let img = channel.apply(&e);
            for a in 0..d {
                for b in 0..d {
                    out[(i * d + a, j * d + b)] = img[(a, b)] / d as f64;
                }
            }
        }
    }
    out
}

/// Entanglement fidelity `<Φ_U| J(E) |Φ_U>` against a target unitary.
pub fn process_fidelity<C: Channel + ?Sized>(channel: &C, target: &CMatrix) -> f64 {
    let d = channel.dim();
    let j = choi(channel);
    // |Φ_U> = (1 ⊗ U) Σ_i |ii> / √d
    let phi = nalgebra::DVector::from_fn(d * d, |r, _| target[(r % d, r / d)] / (d as f64).sqrt());
    (phi.adjoint() * j * phi)[(0, 0)].re
}

pub fn cnot_matrix() -> CMatrix {
    CMatrix::from_fn(4, 4, |i, j| if [0, 1, 3, 2][j] == i { ONE } else { ZERO })
}

/// Werner state `λ |bell><bell| + (1 - λ) I/4` with `λ = (4f - 1)/3`.
pub fn spdc_bell_source(label: BellState, fidelity: f64) -> Result<DensityMatrix> {
    if !(0.25..=1.0).contains(&fidelity) {
        return Err(Error::InvalidArgument(format!("source fidelity {fidelity} outside [0.25, 1]")));
    }
    let lambda = (4.0 * fidelity - 1.0) / 3.0;
    let v = label.state();
    let a = v.amplitudes();
    let m = CMatrix::from_fn(4, 4, |i, j| {
        a[i] * a[j].conj() * lambda + if i == j { linalg::real((1.0 - lambda) / 4.0) } else { ZERO }
    });
    DensityMatrix::from_matrix(m)
}

/// Depolarized CNOT with entanglement fidelity `process_fidelity`.
pub fn noisy_cnot_channel(input: &DensityMatrix, process_fidelity: f64) -> Result<DensityMatrix> {
    if input.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: input.dim() });
    }
    DepolarizedUnitary::from_process_fidelity(cnot_matrix(), process_fidelity)?.apply_density(input)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    pub input_fidelity: f64,
    pub process_fidelity: f64,
    pub seed: Option<u64>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { input_fidelity: 0.97, process_fidelity: 0.86, seed: None }
    }
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self { input_fidelity: 1.0, process_fidelity: 1.0, seed: None }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("input_fidelity", self.input_fidelity), ("process_fidelity", self.process_fidelity)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub rho: DensityMatrix,
    pub fidelity: f64,
    pub success_prob: f64,
}

/// Noisy Bell source, local rotations for `w`, the optical CNOT under the
/// depolarizing process model, then the closing local unitaries.
pub fn noisy_pipeline(params: &CouplingParams, idx: EigenIndex, noise: &NoiseSpec) -> Result<PipelineResult> {
    noise.validate()?;
    let w = mixing_angle(params)?;
    let target: StateVector = eigenstate(params, idx)?;
    let (bell, residual) = bell_reduced_circuit(idx, w);
    debug_assert_eq!(bell, bell_input(idx));
    let rho = spdc_bell_source(bell, noise.input_fidelity)?;

    let gates = residual.gates();
    let cnot_at = gates.iter().position(|g| matches!(g, crate::circuit::Gate::Cnot { .. })).expect("one CNOT");
    let mut before = crate::circuit::Circuit::new(2);
    let mut after = crate::circuit::Circuit::new(2);
    for g in &gates[..cnot_at] {
        before.push(g.clone())?;
    }
    for g in &gates[cnot_at + 1..] {
        after.push(g.clone())?;
    }

    let rho = rho.evolve(&before)?;
    let (ideal, success_prob) = pdbs_cnot(&rho)?;
    let depolarizing = DepolarizedUnitary::from_process_fidelity(linalg::identity(4), noise.process_fidelity)?;
    let rho = depolarizing.apply_density(&ideal)?.evolve(&after)?;
    let f = fidelity(&rho, &target)?;
    Ok(PipelineResult { rho, fidelity: f, success_prob })
}
