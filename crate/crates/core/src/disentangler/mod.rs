//! Diagonalizing circuits.
//!
//! The two-site circuit conjugates `H` into `ω1 Z⊗1 + ω2 1⊗Z`; eigenstates are
//! `ψ_idx = U† |idx - 1>`. The chain compiler lives in [`chain`].

pub mod chain;

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circuit::{apply_circuit, Circuit, Gate, StateVector};
use crate::error::{Error, Result};
use crate::linalg::{self, ZERO};
use crate::spin_model::{mixing_angle, two_site_spectrum, CouplingParams, DenseOperator, MixingAngle};
use crate::C64;

pub use chain::{
    chain_eigenstate, compile_chain_disentangler, compile_chain_disentangler_in_sector, BogoliubovPair,
    BogoliubovPlan, CompiledDisentangler, CompiledExport, Occupation, Stage, StageCounts, UnpairedMode,
};

/// Two-site eigenstate label in `1..=4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct EigenIndex(u8);

impl EigenIndex {
    pub const ALL: [EigenIndex; 4] = [EigenIndex(1), EigenIndex(2), EigenIndex(3), EigenIndex(4)];

    pub fn new(index: u8) -> Result<Self> {
        if (1..=4).contains(&index) {
            Ok(Self(index))
        } else {
            Err(Error::InvalidArgument(format!("eigen index {index} not in 1..=4")))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Computational basis index mapped onto this eigenstate by `U†`.
    pub fn basis_index(self) -> usize {
        usize::from(self.0 - 1)
    }
}

impl TryFrom<u8> for EigenIndex {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EigenIndex> for u8 {
    fn from(v: EigenIndex) -> u8 {
        v.0
    }
}

impl fmt::Display for EigenIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellState {
    #[serde(rename = "phi+")]
    PhiPlus,
    #[serde(rename = "phi-")]
    PhiMinus,
    #[serde(rename = "psi+")]
    PsiPlus,
    #[serde(rename = "psi-")]
    PsiMinus,
}

impl BellState {
    pub fn label(self) -> &'static str {
        match self {
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
            BellState::PsiPlus => "psi+",
            BellState::PsiMinus => "psi-",
        }
    }

    pub fn state(self) -> StateVector {
        let r = C64::new(FRAC_1_SQRT_2, 0.0);
        let amps = match self {
            BellState::PhiPlus => vec![r, ZERO, ZERO, r],
            BellState::PhiMinus => vec![r, ZERO, ZERO, -r],
            BellState::PsiPlus => vec![ZERO, r, r, ZERO],
            BellState::PsiMinus => vec![ZERO, r, -r, ZERO],
        };
        StateVector::from_amplitudes(amps).expect("bell states are normalized")
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Closed-form two-site `U(w)`, with `U H U†` diagonal.
pub fn two_site_unitary_matrix(w: MixingAngle) -> DenseOperator {
    let (c, s) = (linalg::real(w.half_cos()), linalg::real(w.half_sin()));
    let r = linalg::real(FRAC_1_SQRT_2);
    let m = linalg::from_rows([
        [c, ZERO, ZERO, s],
        [ZERO, r, r, ZERO],
        [ZERO, -r, r, ZERO],
        [-s, ZERO, ZERO, c],
    ]);
    DenseOperator::from_matrix(m).expect("4x4 is a valid operator")
}

fn push_all(c: &mut Circuit, gates: impl IntoIterator<Item = Gate>) {
    for g in gates {
        c.push(g).expect("two-site gates are valid");
    }
}

/// Local unitaries that move the Bell basis through the central CNOT.
fn bell_prefix(c: &mut Circuit) {
    push_all(c, [Gate::s(0), Gate::s(1), Gate::h(0), Gate::y(0), Gate::x(1), Gate::cnot(0, 1)]);
}

fn residual_gates(c: &mut Circuit, w: MixingAngle) {
    let half = w.radians() / 2.0;
    push_all(
        c,
        [
            Gate::ry(half - FRAC_PI_4, 0),
            Gate::ry(-half - FRAC_PI_4, 1),
            Gate::cnot(0, 1),
            Gate::y(0),
            Gate::h(0),
            Gate::x(1),
            Gate::s_dagger(0),
            Gate::s_dagger(1),
        ],
    );
}

/// Two-CNOT circuit implementing `U†(w)` up to a global phase.
pub fn two_site_circuit(w: MixingAngle) -> Circuit {
    let mut c = Circuit::new(2);
    bell_prefix(&mut c);
    residual_gates(&mut c, w);
    c
}

/// Bell state produced by the local prefix and first CNOT on input `|idx - 1>`.
pub fn bell_input(idx: EigenIndex) -> BellState {
    match idx.get() {
        1 => BellState::PsiMinus,
        2 => BellState::PhiMinus,
        3 => BellState::PsiPlus,
        _ => BellState::PhiPlus,
    }
}

/// Bell state replacing the first CNOT, plus the residual one-CNOT circuit that
/// maps it exactly onto `ψ_idx`.
pub fn bell_reduced_circuit(idx: EigenIndex, w: MixingAngle) -> (BellState, Circuit) {
    let bell = bell_input(idx);
    let mut c = Circuit::new(2);
    residual_gates(&mut c, w);
    // Fold the leftover global phase into the first gate.
    let out = apply_circuit(&bell.state(), &c).expect("two-qubit circuit");
    let phase = closed_form_state(idx, w).inner(&out).expect("same dimension");
    let correction = phase.conj() / phase.norm();
    let mut fixed = Circuit::new(2);
    for (k, g) in c.gates().iter().enumerate() {
        let g = match (k, g) {
            (0, Gate::Single { target, matrix }) => Gate::single(*target, matrix * correction),
            _ => g.clone(),
        };
        fixed.push(g).expect("valid gate");
    }
    (bell, fixed)
}

fn closed_form_state(idx: EigenIndex, w: MixingAngle) -> StateVector {
    let (c, s) = (linalg::real(w.half_cos()), linalg::real(w.half_sin()));
    let r = linalg::real(FRAC_1_SQRT_2);
    let amps = match idx.get() {
        1 => vec![c, ZERO, ZERO, s],
        2 => vec![ZERO, r, r, ZERO],
        3 => vec![ZERO, r, -r, ZERO],
        _ => vec![-s, ZERO, ZERO, c],
    };
    StateVector::from_amplitudes(amps).expect("closed forms are normalized")
}

/// Closed-form two-site eigenstate `ψ_idx`.
pub fn eigenstate(params: &CouplingParams, idx: EigenIndex) -> Result<StateVector> {
    let w = match idx.get() {
        2 | 3 => MixingAngle::from_radians(0.0)?,
        _ => mixing_angle(params)?,
    };
    Ok(closed_form_state(idx, w))
}

/// Energy of `ψ_idx`: `(E1, E2, E3, E4)`.
pub fn eigenenergy(params: &CouplingParams, idx: EigenIndex) -> f64 {
    two_site_spectrum(params).energies()[idx.basis_index()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{unitary_of_circuit, Expectation};
    use crate::linalg::{max_abs_diff, off_diagonal_norm, phase_aligned_diff, CMatrix};
    use crate::spin_model::{build_xy_hamiltonian, to_dense, Boundary};
    use proptest::prelude::*;

    fn h2(p: &CouplingParams) -> CMatrix {
        to_dense(&build_xy_hamiltonian(p, 2, Boundary::Open).unwrap()).unwrap().into_matrix()
    }

    fn angle(w: f64) -> MixingAngle {
        MixingAngle::from_radians(w).unwrap()
    }

    #[test]
    fn unitary_examples() {
        let u = two_site_unitary_matrix(angle(0.0));
        let r = FRAC_1_SQRT_2;
        let want = CMatrix::from_row_slice(
            4,
            4,
            &[1.0, 0.0, 0.0, 0.0, 0.0, r, r, 0.0, 0.0, -r, r, 0.0, 0.0, 0.0, 0.0, 1.0].map(linalg::real),
        );
        assert!(max_abs_diff(u.matrix(), &want) < 1e-15);
        let u = two_site_unitary_matrix(angle(std::f64::consts::PI));
        assert!(u.matrix()[(0, 0)].norm() < 1e-15 && (u.matrix()[(0, 3)].re - 1.0).abs() < 1e-15);
        assert!((u.matrix()[(3, 0)].re + 1.0).abs() < 1e-15);
        assert!(linalg::unitarity_error(u.matrix()) < 1e-12);
    }

    #[test]
    fn conjugation_gives_quasi_particle_diagonal() {
        let p = CouplingParams::new(1.0, 0.0, 1.0).unwrap();
        let u = two_site_unitary_matrix(mixing_angle(&p).unwrap()).into_matrix();
        let d = &u * h2(&p) * u.adjoint();
        let s2 = 2f64.sqrt();
        let want = [s2, 1.0, -1.0, -s2];
        for k in 0..4 {
            assert!((d[(k, k)].re - want[k]).abs() < 1e-12);
        }
        assert!(off_diagonal_norm(&d) < 1e-12);
    }

    #[test]
    fn circuit_census_and_actions() {
        let w = angle(0.7);
        let c = two_site_circuit(w);
        assert_eq!(c.cnot_count(), 2);
        assert_eq!(c.two_qubit_count(), 2);
        let out = apply_circuit(&StateVector::zero(2), &c).unwrap();
        assert!((out.overlap(&closed_form_state(EigenIndex(1), w)).unwrap() - 1.0).abs() < 1e-10);
        for wv in [0.0, 1.3, -2.9] {
            let out = apply_circuit(&StateVector::basis(2, 1).unwrap(), &two_site_circuit(angle(wv))).unwrap();
            assert!((out.overlap(&BellState::PsiPlus.state()).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn bell_prefix_mapping() {
        for idx in EigenIndex::ALL {
            let mut c = Circuit::new(2);
            bell_prefix(&mut c);
            let out = apply_circuit(&StateVector::basis(2, idx.basis_index()).unwrap(), &c).unwrap();
            assert!((out.overlap(&bell_input(idx).state()).unwrap() - 1.0).abs() < 1e-12, "{idx}");
        }
    }

    #[test]
    fn bell_reduced_outputs() {
        let params = CouplingParams::new(0.4, -0.3, 0.9).unwrap();
        let w = mixing_angle(&params).unwrap();
        let mut outs = Vec::new();
        for idx in EigenIndex::ALL {
            let (bell, c) = bell_reduced_circuit(idx, w);
            assert_eq!(c.cnot_count(), 1);
            let out = apply_circuit(&bell.state(), &c).unwrap();
            let want = eigenstate(&params, idx).unwrap();
            let diff = out.amplitudes().iter().zip(want.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-10, "{idx}: {diff}");
            // Agrees with the full circuit on the computational input.
            let full = apply_circuit(&StateVector::basis(2, idx.basis_index()).unwrap(), &two_site_circuit(w)).unwrap();
            assert!((full.overlap(&out).unwrap() - 1.0).abs() < 1e-10);
            outs.push(out);
        }
        for i in 0..4 {
            for j in i + 1..4 {
                assert!(outs[i].overlap(&outs[j]).unwrap() < 1e-10);
            }
        }
        assert!(EigenIndex::new(5).is_err() && EigenIndex::new(0).is_err());
    }

    #[test]
    fn eigenstate_examples() {
        let p = CouplingParams::new(1.0, 0.0, 1.0).unwrap();
        let psi = eigenstate(&p, EigenIndex(1)).unwrap();
        let (c, s) = ((std::f64::consts::PI / 8.0).cos(), (std::f64::consts::PI / 8.0).sin());
        assert!((psi.amplitudes()[0].re - c).abs() < 1e-12 && (psi.amplitudes()[3].re - s).abs() < 1e-12);
        assert!((eigenenergy(&p, EigenIndex(1)) - 2f64.sqrt()).abs() < 1e-12);
        let q = CouplingParams::new(0.0, 1.0, 1.0).unwrap();
        let psi = eigenstate(&q, EigenIndex(1)).unwrap();
        assert!((psi.amplitudes()[3].re + s).abs() < 1e-12);
        let z = CouplingParams::new(0.5, 0.5, 0.0).unwrap();
        assert!(matches!(eigenstate(&z, EigenIndex(1)), Err(Error::DegenerateAngle)));
        let psi3 = eigenstate(&z, EigenIndex(3)).unwrap();
        let h = build_xy_hamiltonian(&z, 2, Boundary::Open).unwrap();
        assert!((psi3.expectation(&h).unwrap() + 1.0).abs() < 1e-12);
    }

    /// Dense residual `‖Hψ − Eψ‖`.
    fn residual(p: &CouplingParams, idx: EigenIndex) -> f64 {
        let psi = eigenstate(p, idx).unwrap();
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        let hv = h2(p) * &v;
        (hv - v * linalg::real(eigenenergy(p, idx))).norm()
    }

    fn params() -> impl Strategy<Value = CouplingParams> {
        (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0)
            .prop_filter("eigenbasis defined", |(x, y, b)| (x - y).abs() + b.abs() > 1e-3)
            .prop_map(|(x, y, b)| CouplingParams::new(x, y, b).unwrap())
    }

    proptest! {
        #[test]
        fn circuit_matches_unitary_dagger(w in -std::f64::consts::PI..std::f64::consts::PI) {
            let w = angle(w);
            let u = unitary_of_circuit(&two_site_circuit(w)).unwrap();
            let want = two_site_unitary_matrix(w).into_matrix().adjoint();
            prop_assert!(phase_aligned_diff(u.matrix(), &want) < 1e-10);
        }

        #[test]
        fn eigenstates_are_eigenvectors(p in params()) {
            for idx in EigenIndex::ALL {
                prop_assert!(residual(&p, idx) < 1e-10);
            }
        }

        #[test]
        fn eigenstates_orthonormal(p in params()) {
            let states: Vec<_> = EigenIndex::ALL.iter().map(|&i| eigenstate(&p, i).unwrap()).collect();
            for i in 0..4 {
                for j in 0..4 {
                    let g = states[i].inner(&states[j]).unwrap();
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((g - linalg::real(want)).norm() < 1e-10);
                }
            }
        }

        #[test]
        fn energy_ordering_follows_closed_form(p in params()) {
            let e = two_site_spectrum(&p);
            prop_assert_eq!(e.e1() >= e.e2(), p.b.hypot(p.jx - p.jy) >= p.jx + p.jy);
        }
    }
}
