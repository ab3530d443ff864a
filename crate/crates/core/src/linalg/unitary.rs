use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ensure_square, ginibre, trace, unitarity_defect, ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Spectral data of the Hamiltonian a unitary was generated from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub min_energy: f64,
    pub max_energy: f64,
    pub time: f64,
}

#[derive(Debug, Clone)]
pub struct Unitary {
    matrix: ComplexMatrix,
    provenance: Option<Provenance>,
}

impl Unitary {
    /// Wraps `matrix`, checking `U U^dagger = I` to 1e-10.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        ensure_square(&matrix)?;
        let defect = unitarity_defect(&matrix);
        if defect.is_nan() || defect > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "matrix is not unitary (defect {defect:.3e})"
            )));
        }
        Ok(Self {
            matrix,
            provenance: None,
        })
    }

    pub(crate) fn with_provenance(matrix: ComplexMatrix, provenance: Provenance) -> Self {
        Self {
            matrix,
            provenance: Some(provenance),
        }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(d, d),
            provenance: None,
        }
    }

    pub fn diagonal(phases: &[C64]) -> Result<Self> {
        let d = phases.len();
        Self::new(ComplexMatrix::from_fn(d, d, |i, j| {
            if i == j {
                phases[i]
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn provenance(&self) -> Option<Provenance> {
        self.provenance
    }

    pub fn trace(&self) -> C64 {
        trace(&self.matrix)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            provenance: self.provenance.map(|p| Provenance {
                time: -p.time,
                ..p
            }),
        }
    }

    /// Product `self * other`; provenance is kept when both come from the same generator.
    pub fn compose(&self, other: &Unitary) -> Self {
        let provenance = match (self.provenance, other.provenance) {
            (Some(a), Some(b)) if a.min_energy == b.min_energy && a.max_energy == b.max_energy => {
                Some(Provenance {
                    time: a.time + b.time,
                    ..a
                })
            }
            _ => None,
        };
        Self {
            matrix: &self.matrix * &other.matrix,
            provenance,
        }
    }

    pub fn pow(&self, n: u64) -> Self {
        let mut acc = Unitary::identity(self.dim());
        let mut base = self.clone();
        let mut e = n;
        acc.provenance = self.provenance.map(|p| Provenance { time: 0.0, ..p });
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base);
            }
            base = base.compose(&base);
            e >>= 1;
        }
        acc
    }
}

/// `a_U = |Tr U| / d`.
pub fn coherence_factor(u: &Unitary) -> f64 {
    u.trace().norm() / u.dim() as f64
}

/// Phase `phi` in `(-pi, pi]` with `exp(-i phi) = Tr U / |Tr U|`.
///
/// When `U = exp(-iHt)` is tagged with its spectrum and `Delta_max t < pi/2`,
/// the value is taken on the branch inside `[E_1 t, E_L t]`.
pub fn phase_factor(u: &Unitary) -> Result<f64> {
    let tr = u.trace();
    let a = tr.norm() / u.dim() as f64;
    if a <= 1e-12 {
        return Err(Error::TracelessUnitary(a));
    }
    let mut phi = -tr.arg();
    if phi <= -std::f64::consts::PI {
        phi += 2.0 * std::f64::consts::PI;
    }
    if let Some(p) = u.provenance {
        let (lo, hi) = if p.time >= 0.0 {
            (p.min_energy * p.time, p.max_energy * p.time)
        } else {
            (p.max_energy * p.time, p.min_energy * p.time)
        };
        if hi - lo < std::f64::consts::FRAC_PI_2 {
            let center = 0.5 * (lo + hi);
            let two_pi = 2.0 * std::f64::consts::PI;
            phi += two_pi * ((center - phi) / two_pi).round();
        }
    }
    Ok(phi)
}

/// Haar (CUE) random unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` folded back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Unitary {
    let z = ginibre(d, rng);
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        let phase = if n > 0.0 { rjj / n } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    Unitary {
        matrix: q,
        provenance: None,
    }
}
