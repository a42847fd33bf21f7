//! The XY Hamiltonian in a transverse field.
//!
//! `H = Σ_bonds (jx X_i X_j + jy Y_i Y_j) + (b/2) Σ_i Z_i`
//!
//! On two sites this is exactly `jx XX + jy YY + (b/2)(ZI + IZ)`. Longer chains
//! keep the `b/2` per-site field so that the two-site case is a strict
//! specialization.

mod dense;
mod pauli;

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use dense::{
    exact_spectrum, restricted_eigenvalues, to_dense, ComplexRows, DenseOperator, Spectrum, HERMITIAN_TOL,
    MAX_DENSE_QUBITS,
};
pub use pauli::{Pauli, PauliOperator, PauliString, PauliTerm};

use crate::error::{Error, Result};

/// Coupling constants and field, in common energy units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct CouplingParams {
    pub jx: f64,
    pub jy: f64,
    pub b: f64,
}

#[derive(Deserialize)]
struct RawParams {
    jx: f64,
    jy: f64,
    b: f64,
}

impl TryFrom<RawParams> for CouplingParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        CouplingParams::new(r.jx, r.jy, r.b)
    }
}

impl CouplingParams {
    pub fn new(jx: f64, jy: f64, b: f64) -> Result<Self> {
        if !(jx.is_finite() && jy.is_finite() && b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "couplings must be finite (jx={jx}, jy={jy}, b={b})"
            )));
        }
        Ok(Self { jx, jy, b })
    }

    /// Representative couplings `(sin w, 0, cos w)` whose mixing angle is `w`.
    pub fn from_angle(w: f64) -> Result<Self> {
        Self::new(w.sin(), 0.0, w.cos())
    }

    pub fn is_all_zero(&self) -> bool {
        self.jx == 0.0 && self.jy == 0.0 && self.b == 0.0
    }

    /// Fails when every coupling vanishes and no eigenbasis is singled out.
    pub fn require_eigenbasis(&self) -> Result<()> {
        if self.is_all_zero() {
            Err(Error::DegenerateCouplings)
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for CouplingParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(jx={}, jy={}, b={})", self.jx, self.jy, self.b)
    }
}

/// Two-site mixing angle `w`, always in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct MixingAngle(f64);

impl MixingAngle {
    /// Wrap an arbitrary finite angle into `(-π, π]`.
    pub fn from_radians(w: f64) -> Result<Self> {
        if !w.is_finite() {
            return Err(Error::InvalidArgument(format!("mixing angle {w} is not finite")));
        }
        let mut r = w.rem_euclid(2.0 * PI);
        if r > PI {
            r -= 2.0 * PI;
        }
        // rem_euclid of -π lands on π; of values just below π stays put.
        Ok(Self(r))
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn half_cos(self) -> f64 {
        (self.0 / 2.0).cos()
    }

    pub fn half_sin(self) -> f64 {
        (self.0 / 2.0).sin()
    }
}

/// `w = atan2(jx - jy, b)`.
pub fn mixing_angle(params: &CouplingParams) -> Result<MixingAngle> {
    let anisotropy = params.jx - params.jy;
    if anisotropy == 0.0 && params.b == 0.0 {
        return Err(Error::DegenerateAngle);
    }
    MixingAngle::from_radians(anisotropy.atan2(params.b))
}

/// Closed-form two-site energies. `e1 = -e4`, `e2 = -e3` by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoSiteSpectrum {
    e1: f64,
    e2: f64,
    omega1: f64,
    omega2: f64,
}

impl TwoSiteSpectrum {
    pub fn e1(&self) -> f64 {
        self.e1
    }
    pub fn e2(&self) -> f64 {
        self.e2
    }
    pub fn e3(&self) -> f64 {
        -self.e2
    }
    pub fn e4(&self) -> f64 {
        -self.e1
    }
    pub fn omega1(&self) -> f64 {
        self.omega1
    }
    pub fn omega2(&self) -> f64 {
        self.omega2
    }

    /// `[e1, e2, e3, e4]`, labelled by eigenstate index rather than sorted.
    pub fn energies(&self) -> [f64; 4] {
        [self.e1, self.e2, -self.e2, -self.e1]
    }

    /// Diagonal of the disentangled Hamiltonian `ω1 Z⊗1 + ω2 1⊗Z` on
    /// `|00>, |01>, |10>, |11>`.
    pub fn quasi_particle_diagonal(&self) -> [f64; 4] {
        let (a, b) = (self.omega1, self.omega2);
        [a + b, a - b, -a + b, -a - b]
    }
}

pub fn two_site_spectrum(params: &CouplingParams) -> TwoSiteSpectrum {
    let e1 = params.b.hypot(params.jx - params.jy);
    let e2 = params.jx + params.jy;
    TwoSiteSpectrum { e1, e2, omega1: (e1 + e2) / 2.0, omega2: (e1 - e2) / 2.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

impl std::str::FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::InvalidArgument(format!("unknown boundary {other:?}"))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        })
    }
}

/// Nearest-neighbour bonds. On two sites the periodic wrap bond coincides with
/// the open one and is not repeated.
pub fn chain_bonds(num_sites: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut bonds: Vec<(usize, usize)> = (0..num_sites.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    if boundary == Boundary::Periodic && num_sites > 2 {
        bonds.push((num_sites - 1, 0));
    }
    bonds
}

/// XY chain Hamiltonian as a Pauli sum with `2 * bonds + num_sites` terms.
pub fn build_xy_hamiltonian(params: &CouplingParams, num_sites: usize, boundary: Boundary) -> Result<PauliOperator> {
    if num_sites < 2 {
        return Err(Error::InvalidArgument(format!("chain needs at least 2 sites, got {num_sites}")));
    }
    let mut op = PauliOperator::new(num_sites);
    for (i, j) in chain_bonds(num_sites, boundary) {
        op.add_term(params.jx, PauliString::with_sites(num_sites, &[(i, Pauli::X), (j, Pauli::X)]))?;
        op.add_term(params.jy, PauliString::with_sites(num_sites, &[(i, Pauli::Y), (j, Pauli::Y)]))?;
    }
    for i in 0..num_sites {
        op.add_term(params.b / 2.0, PauliString::with_sites(num_sites, &[(i, Pauli::Z)]))?;
    }
    Ok(op)
}

/// Fermion-parity sector, the eigenvalue of `Π_i Z_i` (`+1` even, `-1` odd).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParitySector {
    Even,
    Odd,
}

impl ParitySector {
    pub fn of_index(index: usize) -> Self {
        if index.count_ones().is_multiple_of(2) {
            ParitySector::Even
        } else {
            ParitySector::Odd
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ParitySector::Even => "even",
            ParitySector::Odd => "odd",
        }
    }

    /// Computational basis indices of `num_qubits` qubits in this sector.
    pub fn basis(self, num_qubits: usize) -> Vec<usize> {
        (0..1usize << num_qubits).filter(|&i| Self::of_index(i) == self).collect()
    }
}

impl std::str::FromStr for ParitySector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "even" => Ok(ParitySector::Even),
            "odd" => Ok(ParitySector::Odd),
            other => Err(Error::InvalidArgument(format!("unknown parity sector {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianHeader {
    #[serde(rename = "L")]
    pub num_sites: usize,
    pub boundary: Boundary,
    pub params: CouplingParams,
}

/// On-disk form of a chain Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianFile {
    pub header: HamiltonianHeader,
    pub terms: Vec<PauliTerm>,
}

impl HamiltonianFile {
    pub fn build(params: &CouplingParams, num_sites: usize, boundary: Boundary) -> Result<Self> {
        let op = build_xy_hamiltonian(params, num_sites, boundary)?;
        Ok(Self {
            header: HamiltonianHeader { num_sites, boundary, params: *params },
            terms: op.terms().to_vec(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn operator(&self) -> Result<PauliOperator> {
        PauliOperator::from_terms(self.header.num_sites, self.terms.iter().map(|t| (t.coeff, t.axes.clone())))
    }
}
