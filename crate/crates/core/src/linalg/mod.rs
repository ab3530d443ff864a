//! Dense complex linear algebra shared by every other module.
//!
//! Matrices are `nalgebra` dense matrices over `Complex<f64>`. This module
//! adds the quantum-information plumbing on top: Kronecker products,
//! partial traces, trace norms, Hermitian spectral data, Haar sampling and
//! a JSON fixture format.

mod hamiltonian;
mod json;
mod state;
mod unitary;

pub use hamiltonian::{hermitian_eig, random_hamiltonian, Hamiltonian, DEFAULT_DEGENERACY_TOL};
pub use json::MatrixJson;
pub use state::{partial_trace_matrix, DensityMatrix};
pub use unitary::{coherence_factor, haar_unitary, phase_factor, Provenance, Unitary};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn kron_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    factors
        .iter()
        .fold(identity(1), |acc, f| acc.kronecker(*f))
}

pub fn trace(a: &ComplexMatrix) -> C64 {
    a.diagonal().iter().sum()
}

/// `|i><j|` in dimension `n`.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    m[(i, j)] = ONE;
    m
}

/// Outer product `|u><v|`.
pub fn outer(u: &ComplexVector, v: &ComplexVector) -> ComplexMatrix {
    u * v.adjoint()
}

pub fn projector(v: &ComplexVector) -> ComplexMatrix {
    outer(v, v)
}

pub fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).norm()))
}

pub fn is_finite(a: &ComplexMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn ensure_square(a: &ComplexMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare(a.nrows(), a.ncols()));
    }
    Ok(a.nrows())
}

/// `max |A - A^dagger|` over entries.
pub fn hermiticity_defect(a: &ComplexMatrix) -> f64 {
    max_abs_diff(a, &a.adjoint())
}

/// `max |U U^dagger - I|` over entries.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    max_abs_diff(&(u * u.adjoint()), &identity(u.nrows()))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(a: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let herm = (a + a.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

/// Smallest eigenvalue of the Hermitian part of `a`.
pub fn min_eigenvalue(a: &ComplexMatrix) -> f64 {
    hermitian_eigen(a).0.first().copied().unwrap_or(0.0)
}

/// Sum of singular values.
pub fn trace_norm(a: &ComplexMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.iter().sum()
}

/// Swap of two `d`-dimensional factors.
pub fn swap_operator(d: usize) -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            s[(j * d + i, i * d + j)] = ONE;
        }
    }
    s
}

/// Row-major vectorisation: `vec(A)[i*n + j] = A[i, j]`.
pub fn vectorize(a: &ComplexMatrix) -> ComplexVector {
    let (r, c) = a.shape();
    ComplexVector::from_fn(r * c, |k, _| a[(k / c, k % c)])
}

pub fn unvectorize(v: &ComplexVector, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
}

/// Matrix of i.i.d. standard complex Gaussians (`E|z|^2 = 1`).
pub fn ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * s, im * s)
    })
}

/// Haar-random unit vector in `C^n`.
pub fn random_state_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = ComplexVector::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * s, im * s)
    });
    let norm = v.norm();
    v.unscale(norm)
}

/// Random density matrix `G G^dagger / Tr(G G^dagger)` (Hilbert-Schmidt measure).
pub fn random_density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(n, rng);
    let rho = &g * g.adjoint();
    let tr = trace(&rho).re;
    rho.unscale(tr)
}
