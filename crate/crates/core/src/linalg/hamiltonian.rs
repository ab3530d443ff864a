use rand::Rng;

use super::{
    ensure_square, ginibre, hermitian_eigen, hermiticity_defect, identity, is_finite, max_abs,
    ComplexMatrix, Provenance, Unitary, C64,
};
use crate::error::{Error, Result};

/// Relative clustering tolerance for degenerate eigenvalues.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-9;

/// A Hermitian operator together with its grouped spectral decomposition
/// `H = sum_k E_k P_k`, `E_1 < E_2 < ... < E_L`.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    matrix: ComplexMatrix,
    energies: Vec<f64>,
    /// Orthonormal basis of each eigenspace, one column per vector.
    eigenbases: Vec<ComplexMatrix>,
    projectors: Vec<ComplexMatrix>,
    degeneracy_tol: f64,
}

/// Spectral decomposition with eigenvalues grouped into clusters.
///
/// Two consecutive eigenvalues belong to different clusters when their gap
/// exceeds `tol * ||H||`, with `||H||` the spectral norm.
pub fn hermitian_eig(matrix: &ComplexMatrix, tol: f64) -> Result<Hamiltonian> {
    ensure_square(matrix)?;
    if !is_finite(matrix) {
        return Err(Error::NonFinite);
    }
    let scale = max_abs(matrix);
    let deviation = hermiticity_defect(matrix);
    if deviation > tol * scale {
        return Err(Error::NotHermitian {
            deviation,
            tolerance: tol * scale,
        });
    }
    let (values, vectors) = hermitian_eigen(matrix);
    Ok(Hamiltonian::group(matrix.clone(), &values, &vectors, tol))
}

/// GUE-style random Hamiltonian rescaled to spectral diameter `delta_max`
/// and shifted to zero trace.
pub fn random_hamiltonian<R: Rng + ?Sized>(d: usize, delta_max: f64, rng: &mut R) -> Hamiltonian {
    let g = ginibre(d, rng);
    let a = (&g + g.adjoint()).scale(0.5);
    let (values, vectors) = hermitian_eigen(&a);
    let lo = values[0];
    let hi = values[d - 1];
    let range = hi - lo;
    let scaled: Vec<f64> = if d == 1 || range == 0.0 {
        vec![0.0; d]
    } else {
        let raw: Vec<f64> = values.iter().map(|v| (v - lo) * delta_max / range).collect();
        let mean = raw.iter().sum::<f64>() / d as f64;
        raw.iter().map(|v| v - mean).collect()
    };
    Hamiltonian::from_spectrum(&vectors, &scaled, DEFAULT_DEGENERACY_TOL)
}

impl Hamiltonian {
    /// Decomposes `matrix` with the default degeneracy tolerance.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        hermitian_eig(&matrix, DEFAULT_DEGENERACY_TOL)
    }

    pub fn from_diagonal(energies: &[f64]) -> Self {
        let d = energies.len();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
        let mut vectors = ComplexMatrix::zeros(d, d);
        let mut sorted = Vec::with_capacity(d);
        for (col, &k) in order.iter().enumerate() {
            vectors[(k, col)] = C64::new(1.0, 0.0);
            sorted.push(energies[k]);
        }
        Self::from_spectrum(&vectors, &sorted, DEFAULT_DEGENERACY_TOL)
    }

    /// Builds `V diag(E) V^dagger` from orthonormal columns `V` and ascending `E`.
    pub fn from_spectrum(vectors: &ComplexMatrix, energies: &[f64], tol: f64) -> Self {
        let d = energies.len();
        let mut matrix = ComplexMatrix::zeros(d, d);
        for (k, &e) in energies.iter().enumerate() {
            let v = vectors.column(k);
            matrix += (v * v.adjoint()).scale(e);
        }
        matrix = (&matrix + matrix.adjoint()).scale(0.5);
        Self::group(matrix, energies, vectors, tol)
    }

    fn group(matrix: ComplexMatrix, values: &[f64], vectors: &ComplexMatrix, tol: f64) -> Self {
        let d = values.len();
        let norm = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let threshold = tol * norm;
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for k in 0..d {
            match clusters.last_mut() {
                Some(c) if values[k] - values[*c.last().unwrap()] <= threshold => c.push(k),
                _ => clusters.push(vec![k]),
            }
        }
        let mut energies = Vec::with_capacity(clusters.len());
        let mut eigenbases = Vec::with_capacity(clusters.len());
        let mut projectors = Vec::with_capacity(clusters.len());
        for c in &clusters {
            energies.push(c.iter().map(|&k| values[k]).sum::<f64>() / c.len() as f64);
            let basis = ComplexMatrix::from_fn(d, c.len(), |i, j| vectors[(i, c[j])]);
            projectors.push(&basis * basis.adjoint());
            eigenbases.push(basis);
        }
        Self {
            matrix,
            energies,
            eigenbases,
            projectors,
            degeneracy_tol: tol,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Distinct eigenvalues, strictly increasing.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }

    pub fn eigenbases(&self) -> &[ComplexMatrix] {
        &self.eigenbases
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.eigenbases.iter().map(|b| b.ncols()).collect()
    }

    pub fn num_levels(&self) -> usize {
        self.energies.len()
    }

    pub fn degeneracy_tol(&self) -> f64 {
        self.degeneracy_tol
    }

    pub fn min_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn max_energy(&self) -> f64 {
        *self.energies.last().unwrap()
    }

    /// Spectral diameter `E_L - E_1`.
    pub fn delta_max(&self) -> f64 {
        self.max_energy() - self.min_energy()
    }

    pub fn trace(&self) -> f64 {
        self.energies
            .iter()
            .zip(&self.eigenbases)
            .map(|(e, b)| e * b.ncols() as f64)
            .sum()
    }

    /// `Tr H / d`.
    pub fn mean_energy(&self) -> f64 {
        self.trace() / self.dim() as f64
    }

    /// `sum_k E_k P_k`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.energies
            .iter()
            .zip(&self.projectors)
            .fold(ComplexMatrix::zeros(self.dim(), self.dim()), |acc, (e, p)| {
                acc + p.scale(*e)
            })
    }

    /// `U(t) = exp(-iHt) = sum_k exp(-i E_k t) P_k`.
    pub fn evolve(&self, t: f64) -> Unitary {
        let d = self.dim();
        let matrix = self
            .energies
            .iter()
            .zip(&self.projectors)
            .fold(ComplexMatrix::zeros(d, d), |acc, (e, p)| {
                acc + p * C64::from_polar(1.0, -e * t)
            });
        Unitary::with_provenance(
            matrix,
            Provenance {
                min_energy: self.min_energy(),
                max_energy: self.max_energy(),
                time: t,
            },
        )
    }

    /// `H - shift * I`, keeping the projectors.
    pub fn shifted(&self, shift: f64) -> Self {
        let d = self.dim();
        Self {
            matrix: &self.matrix - identity(d).scale(shift),
            energies: self.energies.iter().map(|e| e - shift).collect(),
            eigenbases: self.eigenbases.clone(),
            projectors: self.projectors.clone(),
            degeneracy_tol: self.degeneracy_tol,
        }
    }
}
