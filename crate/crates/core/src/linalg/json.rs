use serde::{Deserialize, Serialize};

use super::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Fixture format `{dims: [rows, cols], real: [...], imag: [...]}`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dims: [usize; 2],
    pub real: Vec<f64>,
    pub imag: Vec<f64>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let (r, c) = m.shape();
        let mut real = Vec::with_capacity(r * c);
        let mut imag = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                real.push(m[(i, j)].re);
                imag.push(m[(i, j)].im);
            }
        }
        Self {
            dims: [r, c],
            real,
            imag,
        }
    }
}

impl TryFrom<&MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: &MatrixJson) -> Result<Self> {
        let [r, c] = j.dims;
        if j.real.len() != r * c || j.imag.len() != r * c {
            return Err(Error::DimMismatch(format!(
                "dims {r}x{c} but {} real / {} imag entries",
                j.real.len(),
                j.imag.len()
            )));
        }
        Ok(ComplexMatrix::from_fn(r, c, |i, k| {
            C64::new(j.real[i * c + k], j.imag[i * c + k])
        }))
    }
}
