//! Free-fermion disentangler for the periodic XY chain.
//!
//! Pipeline, per fermion-parity sector:
//!
//! 1. `jw-relabel`: sites become Jordan-Wigner modes (`|1>` occupied). In the
//!    even sector the boundary term is antiperiodic, and site `j` picks up the
//!    phase `e^{-iπj/L}` so that a plain discrete Fourier transform follows.
//! 2. `fourier`: radix-2 butterflies on adjacent modes.
//! 3. `antisymmetry`: fermionic swaps that keep butterflies and `(k, -k)` pairs
//!    nearest-neighbour. They interleave with the butterflies.
//! 4. `bogoliubov`: one gate per `(k, -k)` pair on `|00>`, `|11>`.
//!
//! After the circuit `U`, `U H U†` is diagonal on the sector. A paired mode in
//! `|11>` carries `ε_k - E_k`, in `|00>` it carries `ε_k + E_k`, and a singly
//! occupied pair carries `ε_k`, with `ε_k = 2A cos k - b`, `E_k = hypot(ε_k, g_k)`,
//! `g_k = 2Δ sin k`, plus the constant `L b / 2`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::circuit::{apply_circuit, unitary_of_circuit, Circuit, CircuitFile, Gate, StateVector};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ONE, ZERO};
use crate::spin_model::{build_xy_hamiltonian, to_dense, Boundary, CouplingParams, ParitySector};
use crate::C64;

pub const SUPPORTED_LENGTHS: [usize; 4] = [2, 4, 8, 16];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    JwRelabel,
    Fourier,
    Antisymmetry,
    Bogoliubov,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::JwRelabel, Stage::Fourier, Stage::Antisymmetry, Stage::Bogoliubov];

    pub fn label(self) -> &'static str {
        match self {
            Stage::JwRelabel => "jw-relabel",
            Stage::Fourier => "fourier",
            Stage::Antisymmetry => "antisymmetry",
            Stage::Bogoliubov => "bogoliubov",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct StageCounts {
    pub jw_relabel: usize,
    pub fourier: usize,
    pub antisymmetry: usize,
    pub bogoliubov: usize,
}

impl StageCounts {
    pub fn get(&self, stage: Stage) -> usize {
        match stage {
            Stage::JwRelabel => self.jw_relabel,
            Stage::Fourier => self.fourier,
            Stage::Antisymmetry => self.antisymmetry,
            Stage::Bogoliubov => self.bogoliubov,
        }
    }

    fn bump(&mut self, stage: Stage) {
        match stage {
            Stage::JwRelabel => self.jw_relabel += 1,
            Stage::Fourier => self.fourier += 1,
            Stage::Antisymmetry => self.antisymmetry += 1,
            Stage::Bogoliubov => self.bogoliubov += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.jw_relabel + self.fourier + self.antisymmetry + self.bogoliubov
    }
}

/// Bogoliubov rotation for one `(k, -k)` pair sitting on `(position, position + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BogoliubovPair {
    pub position: usize,
    pub k: f64,
    pub minus_k: f64,
    pub theta: f64,
    pub epsilon: f64,
    pub gap: f64,
    pub energy: f64,
}

/// A self-conjugate momentum (`0` or `π`) left unmixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnpairedMode {
    pub position: usize,
    pub k: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BogoliubovPlan {
    pub pairs: Vec<BogoliubovPair>,
    pub unpaired: Vec<UnpairedMode>,
    pub has_self_conjugate: bool,
}

/// Compiled circuit with per-gate stage tags and the predicted diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledDisentangler {
    params: CouplingParams,
    num_sites: usize,
    sector: ParitySector,
    circuit: Circuit,
    stages: Vec<Stage>,
    counts: StageCounts,
    plan: BogoliubovPlan,
}

/// JSON form of a compiled chain circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledExport {
    #[serde(rename = "L")]
    pub num_sites: usize,
    pub sector: ParitySector,
    pub params: CouplingParams,
    pub stage_counts: StageCounts,
    pub plan: BogoliubovPlan,
    pub circuit: CircuitFile,
}

/// Accuracy of the compiled conjugation checked against dense diagonalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalityReport {
    /// Off-diagonal Frobenius norm of the sector block over its full norm.
    pub off_diagonal_ratio: f64,
    /// Sorted diagonal against the sector's exact eigenvalues.
    pub spectrum_error: f64,
    /// Diagonal against the closed-form mode energies.
    pub prediction_error: f64,
}

impl CompiledDisentangler {
    pub fn params(&self) -> CouplingParams {
        self.params
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn sector(&self) -> ParitySector {
        self.sector
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn stage_counts(&self) -> StageCounts {
        self.counts
    }

    pub fn plan(&self) -> &BogoliubovPlan {
        &self.plan
    }

    pub fn gate_count(&self) -> usize {
        self.circuit.len()
    }

    /// Energy of computational basis state `index` after conjugation.
    pub fn diagonal_energy(&self, index: usize) -> f64 {
        let l = self.num_sites;
        let bit = |p: usize| (index >> (l - 1 - p)) & 1 == 1;
        let mut e = l as f64 * self.params.b / 2.0;
        for pr in &self.plan.pairs {
            e += match (bit(pr.position), bit(pr.position + 1)) {
                (false, false) => pr.epsilon + pr.energy,
                (true, true) => pr.epsilon - pr.energy,
                _ => pr.epsilon,
            };
        }
        for u in &self.plan.unpaired {
            if bit(u.position) {
                e += u.epsilon;
            }
        }
        e
    }

    /// Predicted `diag(U H U†)` over the sector basis, in basis order.
    pub fn predicted_diagonal(&self) -> Vec<(usize, f64)> {
        self.sector.basis(self.num_sites).into_iter().map(|i| (i, self.diagonal_energy(i))).collect()
    }

    /// Excitation energy of each layout position relative to the
    /// all-occupied reference.
    pub fn mode_energies(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.num_sites];
        for pr in &self.plan.pairs {
            out[pr.position] = pr.energy;
            out[pr.position + 1] = pr.energy;
        }
        for u in &self.plan.unpaired {
            out[u.position] = -u.epsilon;
        }
        out
    }

    pub fn predicted_energy(&self, occupation: &Occupation) -> Result<f64> {
        Ok(self.diagonal_energy(self.basis_index(occupation)?))
    }

    fn basis_index(&self, occupation: &Occupation) -> Result<usize> {
        if occupation.len() != self.num_sites {
            return Err(Error::MalformedOccupation(format!(
                "pattern has {} modes, chain has {}",
                occupation.len(),
                self.num_sites
            )));
        }
        if occupation.parity() != self.sector {
            return Err(Error::ParityMismatch(self.sector.label()));
        }
        let full = (1usize << self.num_sites) - 1;
        Ok(full ^ occupation.to_index())
    }

    pub fn to_export(&self) -> CompiledExport {
        let mut file = self.circuit.to_file();
        for (r, s) in file.gates.iter_mut().zip(&self.stages) {
            r.stage = Some(s.label().to_string());
        }
        CompiledExport {
            num_sites: self.num_sites,
            sector: self.sector,
            params: self.params,
            stage_counts: self.counts,
            plan: self.plan.clone(),
            circuit: file,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_export())?)
    }

    /// Dense check of `U H U†` on the compiled sector.
    pub fn verify(&self) -> Result<DiagonalityReport> {
        let h = to_dense(&build_xy_hamiltonian(&self.params, self.num_sites, Boundary::Periodic)?)?;
        let u = unitary_of_circuit(&self.circuit)?.into_matrix();
        let conj = &u * h.matrix() * u.adjoint();
        let basis = self.sector.basis(self.num_sites);
        let block = CMatrix::from_fn(basis.len(), basis.len(), |i, j| conj[(basis[i], basis[j])]);
        let norm = linalg::frobenius_norm(&block);
        let off = linalg::off_diagonal_norm(&block);
        let mut diag: Vec<f64> = (0..basis.len()).map(|i| block[(i, i)].re).collect();
        let prediction_error = basis
            .iter()
            .zip(&diag)
            .map(|(&idx, d)| (self.diagonal_energy(idx) - d).abs())
            .fold(0.0, f64::max);
        diag.sort_by(f64::total_cmp);
        let exact = linalg::eigh(&h.restrict(&basis)).0;
        let spectrum_error = diag.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Ok(DiagonalityReport {
            off_diagonal_ratio: if norm > 0.0 { off / norm } else { off },
            spectrum_error,
            prediction_error,
        })
    }
}

/// Quasi-particle excitation pattern over layout positions. Bit `p` set means
/// the mode at position `p` is excited above the sector's lowest configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Occupation(Vec<bool>);

impl Occupation {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn vacuum(num_modes: usize) -> Self {
        Self(vec![false; num_modes])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn parity(&self) -> ParitySector {
        if self.count().is_multiple_of(2) {
            ParitySector::Even
        } else {
            ParitySector::Odd
        }
    }

    fn to_index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
    }
}

impl FromStr for Occupation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::MalformedOccupation(format!("unexpected character {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if bits.is_empty() {
            return Err(Error::MalformedOccupation("empty pattern".into()));
        }
        Ok(Self(bits))
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|&b| f.write_str(if b { "1" } else { "0" }))
    }
}

/// Two-mode number-conserving gate from its single-particle matrix `v`
/// (mode `a` on the first qubit, mode `b` on the second).
fn mode_mixer(v: [[C64; 2]; 2]) -> Matrix4<C64> {
    let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
    let mut m = Matrix4::zeros();
    m[(0, 0)] = ONE;
    m[(3, 3)] = det;
    m[(2, 2)] = v[0][0];
    m[(1, 2)] = v[1][0];
    m[(2, 1)] = v[0][1];
    m[(1, 1)] = v[1][1];
    m
}

fn fswap() -> Matrix4<C64> {
    mode_mixer([[ZERO, ONE], [ONE, ZERO]])
}

/// Radix-2 step: `(x_a, x_b) -> ((x_a + W x_b), (x_a - W x_b)) / √2`.
fn butterfly(q: usize, m: usize) -> Matrix4<C64> {
    let r = C64::new(FRAC_1_SQRT_2, 0.0);
    let w = C64::from_polar(1.0, -2.0 * PI * q as f64 / m as f64);
    mode_mixer([[r, r * w], [r, -r * w]])
}

fn bogoliubov_gate(theta: f64) -> Matrix4<C64> {
    let (s, c) = (theta / 2.0).sin_cos();
    let mut m = Matrix4::zeros();
    m[(0, 0)] = C64::new(c, 0.0);
    m[(0, 3)] = C64::new(0.0, -s);
    m[(3, 0)] = C64::new(-s, 0.0);
    m[(3, 3)] = C64::new(0.0, -c);
    m[(1, 1)] = ONE;
    m[(2, 2)] = ONE;
    m
}

struct Builder {
    circuit: Circuit,
    stages: Vec<Stage>,
}

impl Builder {
    fn push(&mut self, gate: Gate, stage: Stage) {
        self.circuit.push(gate).expect("compiler emits valid gates");
        self.stages.push(stage);
    }

    /// Reorder `current` (tokens on positions `off..`) into `target` with
    /// adjacent fermionic swaps.
    fn route(&mut self, off: usize, current: &mut [usize], target: &[usize]) {
        for (i, want) in target.iter().enumerate() {
            let mut p = current.iter().position(|t| t == want).expect("target is a permutation");
            while p > i {
                self.push(Gate::two_qubit(off + p - 1, off + p, fswap()), Stage::Antisymmetry);
                current.swap(p - 1, p);
                p -= 1;
            }
        }
    }

    /// Unitary DFT on modes `off..off + m`; returns the frequency held at each
    /// local position.
    fn fft(&mut self, off: usize, m: usize) -> Vec<usize> {
        if m == 1 {
            return vec![0];
        }
        let half = m / 2;
        let mut order: Vec<usize> = (0..m).collect();
        let unshuffled: Vec<usize> = (0..m).step_by(2).chain((1..m).step_by(2)).collect();
        self.route(off, &mut order, &unshuffled);
        let labels = self.fft(off, half);
        let odd_labels = self.fft(off + half, half);
        debug_assert_eq!(labels, odd_labels);
        let mut tokens: Vec<usize> = (0..m).collect();
        let interleaved: Vec<usize> = (0..half).flat_map(|i| [i, i + half]).collect();
        self.route(off, &mut tokens, &interleaved);
        let mut out = Vec::with_capacity(m);
        for (i, &q) in labels.iter().enumerate() {
            self.push(Gate::two_qubit(off + 2 * i, off + 2 * i + 1, butterfly(q, m)), Stage::Fourier);
            out.extend([q, q + half]);
        }
        out
    }
}

/// Compile the even-parity sector, which holds the global ground state for
/// generic couplings.
pub fn compile_chain_disentangler(params: &CouplingParams, num_sites: usize) -> Result<CompiledDisentangler> {
    compile_chain_disentangler_in_sector(params, num_sites, ParitySector::Even)
}

pub fn compile_chain_disentangler_in_sector(
    params: &CouplingParams,
    num_sites: usize,
    sector: ParitySector,
) -> Result<CompiledDisentangler> {
    if !SUPPORTED_LENGTHS.contains(&num_sites) {
        return Err(Error::UnsupportedLength(num_sites));
    }
    let l = num_sites;
    // On two sites the ring visits the single bond twice.
    let scale = if l == 2 { 0.5 } else { 1.0 };
    let hop = (params.jx + params.jy) * scale;
    let pair = (params.jx - params.jy) * scale;
    let shift = match sector {
        ParitySector::Even => 0.5,
        ParitySector::Odd => 0.0,
    };
    let momentum = |q: usize| 2.0 * PI * (q as f64 + shift) / l as f64;
    let epsilon = |k: f64| 2.0 * hop * k.cos() - params.b;

    let mut b = Builder { circuit: Circuit::new(l), stages: Vec::new() };
    if sector == ParitySector::Even {
        for j in 1..l {
            b.push(Gate::phase(-PI * j as f64 / l as f64, j), Stage::JwRelabel);
        }
    }
    let mut labels = b.fft(0, l);

    let (pairs, unpaired): (Vec<(usize, usize)>, Vec<usize>) = match sector {
        ParitySector::Even => ((0..l / 2).map(|q| (q, l - 1 - q)).collect(), Vec::new()),
        ParitySector::Odd => ((1..l / 2).map(|q| (q, l - q)).collect(), vec![0, l / 2]),
    };
    let target: Vec<usize> = pairs.iter().flat_map(|&(a, c)| [a, c]).chain(unpaired.iter().copied()).collect();
    b.route(0, &mut labels, &target);

    let mut plan = BogoliubovPlan { pairs: Vec::new(), unpaired: Vec::new(), has_self_conjugate: !unpaired.is_empty() };
    for (r, &(qa, qb)) in pairs.iter().enumerate() {
        let k = momentum(qa);
        let eps = epsilon(k);
        let gap = 2.0 * pair * k.sin();
        let theta = gap.atan2(-eps);
        let position = 2 * r;
        b.push(Gate::two_qubit(position, position + 1, bogoliubov_gate(theta)), Stage::Bogoliubov);
        plan.pairs.push(BogoliubovPair {
            position,
            k,
            minus_k: momentum(qb),
            theta,
            epsilon: eps,
            gap,
            energy: eps.hypot(gap),
        });
    }
    for (i, &q) in unpaired.iter().enumerate() {
        let k = momentum(q);
        plan.unpaired.push(UnpairedMode { position: 2 * pairs.len() + i, k, epsilon: epsilon(k) });
    }

    let mut counts = StageCounts::default();
    for &s in &b.stages {
        counts.bump(s);
    }
    Ok(CompiledDisentangler { params: *params, num_sites: l, sector, circuit: b.circuit, stages: b.stages, counts, plan })
}

/// `U† |reference ⊕ occupation>`, an eigenstate of the periodic chain.
pub fn chain_eigenstate(compiled: &CompiledDisentangler, occupation: &Occupation) -> Result<StateVector> {
    let index = compiled.basis_index(occupation)?;
    apply_circuit(&StateVector::basis(compiled.num_sites, index)?, &compiled.circuit.inverse())
}
