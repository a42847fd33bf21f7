//! Small dense complex linear-algebra helpers shared by every module.

use nalgebra::DMatrix;

use crate::C64;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Kronecker product with `a` on the more significant index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest entrywise modulus of `a - a^dagger`.
pub fn hermiticity_error(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entrywise deviation of `u^dagger u` from the identity.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

pub fn frobenius_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius norm of the off-diagonal part.
pub fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let mut acc = 0.0;
    for ((i, j), z) in a.iter().enumerate().map(|(k, z)| ((k % a.nrows(), k / a.nrows()), z)) {
        if i != j {
            acc += z.norm_sqr();
        }
    }
    acc.sqrt()
}

/// Maximum entry deviation between `a` and `b` after removing the global phase
/// that maximizes `|tr(a^dagger b)|`.
pub fn phase_aligned_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    let overlap: C64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    max_abs_diff(&a.map(|z| z * phase), b)
}

/// Eigendecomposition of a hermitian matrix with eigenvalues ascending.
///
/// Columns of the returned matrix are the matching orthonormal eigenvectors.
pub fn eigh(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    // Symmetrize first so round-off asymmetry never reaches the solver.
    let sym = (a + a.adjoint()).map(|z| z * 0.5);
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Apply `f` to the eigenvalues of a hermitian matrix.
pub fn hermitian_function(a: &CMatrix, f: impl Fn(f64) -> C64) -> CMatrix {
    let (values, vectors) = eigh(a);
    let mut scaled = vectors.clone();
    for (j, &lambda) in values.iter().enumerate() {
        let factor = f(lambda);
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= factor);
    }
    scaled * vectors.adjoint()
}

pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> CMatrix {
    CMatrix::from_fn(N, N, |i, j| rows[i][j])
}

pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_sorts_and_reconstructs() {
        let a = from_rows([[real(3.0), real(0.0)], [real(0.0), real(1.0)]]);
        let (values, vectors) = eigh(&a);
        assert_eq!(values, vec![1.0, 3.0]);
        assert!((vectors[(1, 0)].norm() - 1.0).abs() < 1e-14);
        assert!((vectors[(0, 1)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigh_complex_hermitian_residual() {
        let a = from_rows([
            [real(1.0), C64::new(0.5, -0.25), real(0.0)],
            [C64::new(0.5, 0.25), real(-2.0), C64::new(0.0, 1.0)],
            [real(0.0), C64::new(0.0, -1.0), real(0.3)],
        ]);
        let (values, vectors) = eigh(&a);
        for (j, &lambda) in values.iter().enumerate() {
            let v = vectors.column(j).into_owned();
            let r = &a * &v - v.map(|z| z * lambda);
            assert!(r.norm() < 1e-12);
        }
        assert!(unitarity_error(&vectors) < 1e-12);
    }

    #[test]
    fn phase_alignment_ignores_global_phase() {
        let a = from_rows([[real(0.0), real(1.0)], [real(1.0), real(0.0)]]);
        let b = a.map(|z| z * C64::from_polar(1.0, 0.7));
        assert!(phase_aligned_diff(&a, &b) < 1e-15);
        assert!(max_abs_diff(&a, &b) > 0.1);
    }
}
