
use super::{
    ensure_square, hermiticity_defect, kron, min_eigenvalue, projector, trace, ComplexMatrix,
    ComplexVector, C64,
};
use crate::error::{Error, Result};

/// A density operator on a tensor product of subsystems.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (min eigenvalue >= -1e-10).
    pub fn new(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        let rho = Self::new_unchecked(matrix, dims)?;
        let herm = hermiticity_defect(&rho.matrix);
        if herm > 1e-10 {
            return Err(Error::NotHermitian {
                deviation: herm,
                tolerance: 1e-10,
            });
        }
        let tr = trace(&rho.matrix);
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("trace {tr} is not 1")));
        }
        let min = min_eigenvalue(&rho.matrix);
        if min < -1e-10 {
            return Err(Error::InvalidArgument(format!(
                "not positive semidefinite (min eigenvalue {min:.3e})"
            )));
        }
        Ok(rho)
    }

    /// Only checks that `dims` factorises the matrix size.
    pub fn new_unchecked(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        let n = ensure_square(&matrix)?;
        if dims.iter().product::<usize>() != n {
            return Err(Error::DimMismatch(format!(
                "subsystem dims {dims:?} do not multiply to {n}"
            )));
        }
        Ok(Self { matrix, dims })
    }

    pub fn pure(psi: &ComplexVector, dims: Vec<usize>) -> Result<Self> {
        Self::new_unchecked(projector(psi), dims)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(d, d).unscale(d as f64),
            dims: vec![d],
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        trace(&self.matrix)
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            matrix: kron(&self.matrix, &other.matrix),
            dims,
        }
    }

    /// Reduced state on the subsystems listed in `keep` (kept in ascending order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let matrix = partial_trace_matrix(&self.matrix, &self.dims, keep)?;
        let mut keep_sorted = keep.to_vec();
        keep_sorted.sort_unstable();
        let dims = keep_sorted.iter().map(|&k| self.dims[k]).collect();
        Ok(Self { matrix, dims })
    }
}

/// Partial trace of an operator on `dims[0] x dims[1] x ...`, keeping `keep`.
pub fn partial_trace_matrix(
    matrix: &ComplexMatrix,
    dims: &[usize],
    keep: &[usize],
) -> Result<ComplexMatrix> {
    let n = ensure_square(matrix)?;
    if dims.iter().product::<usize>() != n {
        return Err(Error::DimMismatch(format!(
            "subsystem dims {dims:?} do not multiply to {n}"
        )));
    }
    let mut keep_mask = vec![false; dims.len()];
    for &k in keep {
        if k >= dims.len() {
            return Err(Error::DimMismatch(format!(
                "subsystem index {k} out of range for {} subsystems",
                dims.len()
            )));
        }
        keep_mask[k] = true;
    }
    let kept: Vec<usize> = (0..dims.len()).filter(|&k| keep_mask[k]).collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|&k| !keep_mask[k]).collect();
    let dk: usize = kept.iter().map(|&k| dims[k]).product();
    let dt: usize = traced.iter().map(|&k| dims[k]).product();

    // Row-major strides of the full index.
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let offset = |sub: &[usize], mut idx: usize| -> usize {
        let mut off = 0;
        for &k in sub.iter().rev() {
            off += (idx % dims[k]) * strides[k];
            idx /= dims[k];
        }
        off
    };
    let kept_off: Vec<usize> = (0..dk).map(|i| offset(&kept, i)).collect();
    let traced_off: Vec<usize> = (0..dt).map(|i| offset(&traced, i)).collect();

    let mut out = ComplexMatrix::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut acc = C64::new(0.0, 0.0);
            for &t in &traced_off {
                acc += matrix[(kept_off[i] + t, kept_off[j] + t)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs_diff, random_density};
    use crate::rng::seeded;

    #[test]
    fn product_state_reduces_to_factor() {
        let mut rng = seeded(31);
        let a = DensityMatrix::new(random_density(2, &mut rng), vec![2]).unwrap();
        let b = DensityMatrix::new(random_density(3, &mut rng), vec![3]).unwrap();
        let ab = a.tensor(&b);
        assert!(max_abs_diff(ab.partial_trace(&[0]).unwrap().matrix(), a.matrix()) < 1e-12);
        assert!(max_abs_diff(ab.partial_trace(&[1]).unwrap().matrix(), b.matrix()) < 1e-12);
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = ComplexVector::from_vec(vec![
            C64::new(s, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(s, 0.0),
        ]);
        let rho = DensityMatrix::pure(&psi, vec![2, 2]).unwrap();
        let red = rho.partial_trace(&[0]).unwrap();
        assert!(max_abs_diff(red.matrix(), &identity(2).unscale(2.0)) < 1e-12);
    }

    #[test]
    fn random_states_keep_unit_trace() {
        let mut rng = seeded(32);
        for _ in 0..100 {
            let rho = DensityMatrix::new(random_density(6, &mut rng), vec![2, 3]).unwrap();
            for keep in [[0usize].as_slice(), &[1]] {
                let tr = rho.partial_trace(keep).unwrap().trace();
                assert!((tr.re - 1.0).abs() < 1e-12 && tr.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn middle_subsystem() {
        let mut rng = seeded(33);
        let a = random_density(2, &mut rng);
        let b = random_density(3, &mut rng);
        let c = random_density(2, &mut rng);
        let abc = kron(&kron(&a, &b), &c);
        let ac = partial_trace_matrix(&abc, &[2, 3, 2], &[0, 2]).unwrap();
        assert!(max_abs_diff(&ac, &kron(&a, &c)) < 1e-12);
        let bb = partial_trace_matrix(&abc, &[2, 3, 2], &[1]).unwrap();
        assert!(max_abs_diff(&bb, &b) < 1e-12);
    }

    #[test]
    fn dim_mismatch() {
        let m = identity(6);
        assert!(matches!(
            partial_trace_matrix(&m, &[2, 2], &[0]),
            Err(Error::DimMismatch(_))
        ));
        assert!(matches!(
            DensityMatrix::new_unchecked(m, vec![4, 2]),
            Err(Error::DimMismatch(_))
        ));
    }
}
