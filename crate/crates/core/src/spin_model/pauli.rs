//! Pauli strings and real-weighted sums of them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{ONE, ZERO};
use crate::C64;

/// Single-qubit Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    /// Image of the basis state `|bit>`: returns the flipped flag and phase.
    #[inline]
    fn act(self, bit: bool) -> (bool, C64) {
        match self {
            Pauli::I => (false, ONE),
            Pauli::X => (true, ONE),
            // Y|0> = i|1>, Y|1> = -i|0>
            Pauli::Y => (true, if bit { C64::new(0.0, -1.0) } else { C64::new(0.0, 1.0) }),
            Pauli::Z => (false, if bit { -ONE } else { ONE }),
        }
    }

    pub fn matrix(self) -> [[C64; 2]; 2] {
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => [[ONE, ZERO], [ZERO, ONE]],
            Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
            Pauli::Y => [[ZERO, -i], [i, ZERO]],
            Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }
}

/// Tensor product of single-qubit Paulis; position 0 is qubit 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(axes: Vec<Pauli>) -> Self {
        Self(axes)
    }

    pub fn identity(num_qubits: usize) -> Self {
        Self(vec![Pauli::I; num_qubits])
    }

    /// `axis` on each listed site, identity elsewhere.
    pub fn with_sites(num_qubits: usize, sites: &[(usize, Pauli)]) -> Self {
        let mut axes = vec![Pauli::I; num_qubits];
        for &(site, p) in sites {
            axes[site] = p;
        }
        Self(axes)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn axes(&self) -> &[Pauli] {
        &self.0
    }

    /// Sites carrying a non-identity factor.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != Pauli::I)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let clashes = self
            .0
            .iter()
            .zip(&other.0)
            .filter(|(a, b)| **a != Pauli::I && **b != Pauli::I && a != b)
            .count();
        clashes % 2 == 0
    }

    /// Image of basis state `index`: `P|index> = phase |image>`.
    #[inline]
    pub fn apply_to_index(&self, index: usize) -> (usize, C64) {
        let n = self.0.len();
        let mut image = index;
        let mut phase = ONE;
        for (q, &p) in self.0.iter().enumerate() {
            if p == Pauli::I {
                continue;
            }
            let mask = 1 << (n - 1 - q);
            let (flip, ph) = p.act(index & mask != 0);
            if flip {
                image ^= mask;
            }
            phase *= ph;
        }
        (image, phase)
    }

    /// `P |psi>` for a dense amplitude vector.
    pub fn apply(&self, amplitudes: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; amplitudes.len()];
        for (i, &a) in amplitudes.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            let (j, ph) = self.apply_to_index(i);
            out[j] += ph * a;
        }
        out
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| {
                Pauli::from_symbol(c.to_ascii_uppercase())
                    .ok_or_else(|| Error::InvalidArgument(format!("bad Pauli symbol {c:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(PauliString)
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coeff: f64,
    pub axes: PauliString,
}

/// Real linear combination of Pauli strings on a fixed number of qubits.
///
/// Real coefficients make every operator hermitian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliOperator {
    num_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl PauliOperator {
    pub fn new(num_qubits: usize) -> Self {
        Self { num_qubits, terms: Vec::new() }
    }

    /// Build from raw terms, merging duplicates.
    pub fn from_terms(num_qubits: usize, terms: impl IntoIterator<Item = (f64, PauliString)>) -> Result<Self> {
        let mut op = Self::new(num_qubits);
        for (coeff, axes) in terms {
            op.add_term(coeff, axes)?;
        }
        Ok(op)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Add `coeff * axes`; an existing identical string absorbs the coefficient.
    pub fn add_term(&mut self, coeff: f64, axes: PauliString) -> Result<()> {
        if axes.len() != self.num_qubits {
            return Err(Error::DimensionMismatch { expected: self.num_qubits, found: axes.len() });
        }
        if !coeff.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite coefficient on {axes}")));
        }
        match self.terms.iter_mut().find(|t| t.axes == axes) {
            Some(t) => t.coeff += coeff,
            None => self.terms.push(PauliTerm { coeff, axes }),
        }
        Ok(())
    }

    /// Merge duplicate strings, keeping first-appearance order.
    pub fn canonicalize(&self) -> Self {
        let mut out = Self::new(self.num_qubits);
        for t in &self.terms {
            out.add_term(t.coeff, t.axes.clone()).expect("terms already validated");
        }
        out
    }

    pub fn is_canonical(&self) -> bool {
        self.terms
            .iter()
            .enumerate()
            .all(|(i, t)| self.terms[..i].iter().all(|u| u.axes != t.axes))
    }

    /// Drop terms with `|coeff| <= tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        Self {
            num_qubits: self.num_qubits,
            terms: self.terms.iter().filter(|t| t.coeff.abs() > tol).cloned().collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            num_qubits: self.num_qubits,
            terms: self
                .terms
                .iter()
                .map(|t| PauliTerm { coeff: t.coeff * factor, axes: t.axes.clone() })
                .collect(),
        }
    }

    pub fn plus(&self, other: &PauliOperator) -> Result<Self> {
        let mut out = self.clone();
        for t in &other.terms {
            out.add_term(t.coeff, t.axes.clone())?;
        }
        Ok(out)
    }

    pub fn coefficient_l1(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    pub fn coefficient_of(&self, axes: &str) -> Option<f64> {
        let axes: PauliString = axes.parse().ok()?;
        self.terms.iter().find(|t| t.axes == axes).map(|t| t.coeff)
    }

    /// `O |psi>` on a dense amplitude vector of length `2^num_qubits`.
    pub fn apply(&self, amplitudes: &[C64]) -> Result<Vec<C64>> {
        let dim = 1usize << self.num_qubits;
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: amplitudes.len() });
        }
        let mut out = vec![ZERO; dim];
        for t in &self.terms {
            for (i, &a) in amplitudes.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let (j, ph) = t.axes.apply_to_index(i);
                out[j] += ph * a * t.coeff;
            }
        }
        Ok(out)
    }
}
