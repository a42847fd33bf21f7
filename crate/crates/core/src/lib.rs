//! Exact disentangling circuits for the transverse-field XY model.
//!
//! The crate is organised bottom-up:
//!
//! - [`spin_model`]: Pauli algebra, the XY Hamiltonian, closed-form two-site
//!   spectrum and a dense exact-diagonalization oracle.
//! - [`circuit`]: a statevector / density-matrix gate engine.
//! - [`disentangler`]: the two-CNOT two-site circuit, its Bell-input reduction
//!   and the general L-site Jordan-Wigner / Fourier / Bogoliubov compiler.
//! - [`optics`]: the photonic realization (PDBS postselected CNOT, noisy entangled
//!   photon source, depolarizing process model).
//! - [`tomography`]: simulated Pauli-basis measurements and state reconstruction.
//! - [`quench`]: exact and Trotterized dynamics after a sudden change of the
//!   Hamiltonian.
//!
//! Qubit 0 is the most significant bit of a basis index, so `|q0 q1>` has
//! index `2*q0 + q1`.

pub mod circuit;
pub mod disentangler;
pub mod error;
pub mod linalg;
pub mod optics;
pub mod quench;
pub mod spin_model;
pub mod tomography;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
