//! Dense matrix representation and the exact-diagonalization oracle.

use serde::{Deserialize, Serialize};

use super::pauli::PauliOperator;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::C64;

/// Largest register `to_dense` will expand.
pub const MAX_DENSE_QUBITS: usize = 14;

/// Tolerance for `|A - A^dagger|` entries when an operator must be hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// `2^L x 2^L` complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    matrix: CMatrix,
}

impl DenseOperator {
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let (r, c) = matrix.shape();
        if r != c {
            return Err(Error::DimensionMismatch { expected: r, found: c });
        }
        if !r.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("dimension {r} is not a power of two")));
        }
        Ok(Self { matrix })
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

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn hermiticity_error(&self) -> f64 {
        linalg::hermiticity_error(&self.matrix)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() < HERMITIAN_TOL
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Principal submatrix on the listed basis indices.
    pub fn restrict(&self, basis: &[usize]) -> CMatrix {
        CMatrix::from_fn(basis.len(), basis.len(), |i, j| self.matrix[(basis[i], basis[j])])
    }
}

/// Entrywise expansion of a Pauli sum.
pub fn to_dense(op: &PauliOperator) -> Result<DenseOperator> {
    let n = op.num_qubits();
    if n > MAX_DENSE_QUBITS {
        return Err(Error::ResourceLimit(format!(
            "{n} qubits exceeds the dense limit of {MAX_DENSE_QUBITS}"
        )));
    }
    let dim = 1usize << n;
    let mut m = CMatrix::zeros(dim, dim);
    for t in op.terms() {
        for col in 0..dim {
            let (row, phase) = t.axes.apply_to_index(col);
            m[(row, col)] += phase * t.coeff;
        }
    }
    Ok(DenseOperator { matrix: m })
}

/// Ascending eigenvalues with orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Spectrum {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k).iter().copied().collect()
    }
}

/// Full eigendecomposition of a hermitian operator.
pub fn exact_spectrum(op: &DenseOperator) -> Result<Spectrum> {
    let err = op.hermiticity_error();
    if err >= HERMITIAN_TOL {
        return Err(Error::NotHermitian(err));
    }
    let (values, vectors) = linalg::eigh(op.matrix());
    Ok(Spectrum { values, vectors })
}

/// Eigenvalues of a hermitian matrix restricted to the given basis states.
pub fn restricted_eigenvalues(op: &DenseOperator, basis: &[usize]) -> Vec<f64> {
    linalg::eigh(&op.restrict(basis)).0
}

/// Serialized row of a complex matrix: `[[re, im], ...]`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ComplexRows(pub Vec<Vec<[f64; 2]>>);

impl From<&CMatrix> for ComplexRows {
    fn from(m: &CMatrix) -> Self {
        ComplexRows(
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        )
    }
}

impl ComplexRows {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.0.len();
        if self.0.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("complex matrix rows must be square".into()));
        }
        Ok(CMatrix::from_fn(n, n, |i, j| C64::new(self.0[i][j][0], self.0[i][j][1])))
    }
}
