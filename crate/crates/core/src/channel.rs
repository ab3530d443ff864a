//! Linear maps on operators, stored as superoperators.
//!
//! A channel `Phi` from `C^{n x n}` to `C^{k x k}` is the `k^2 x n^2` matrix
//! `S` with `vec(Phi(X)) = S vec(X)` under row-major vectorisation. With that
//! convention `X -> A X B` has superoperator `A (x) B^T`.

use crate::error::{Error, Result};
use crate::linalg::{
    kron, matrix_unit, max_abs_diff, min_eigenvalue, trace, unvectorize, vectorize,
    ComplexMatrix, MatrixJson, Unitary, C64,
};

#[derive(Debug, Clone)]
pub struct QuantumChannel {
    superop: ComplexMatrix,
    input_dim: usize,
    output_dim: usize,
}

impl QuantumChannel {
    pub fn from_superoperator(
        superop: ComplexMatrix,
        input_dim: usize,
        output_dim: usize,
    ) -> Result<Self> {
        if superop.shape() != (output_dim * output_dim, input_dim * input_dim) {
            return Err(Error::DimMismatch(format!(
                "superoperator shape {:?} does not match {input_dim} -> {output_dim}",
                superop.shape()
            )));
        }
        Ok(Self {
            superop,
            input_dim,
            output_dim,
        })
    }

    /// Tabulates a linear map from its action on matrix units.
    pub fn from_linear_map<F>(input_dim: usize, output_dim: usize, map: F) -> Self
    where
        F: Fn(&ComplexMatrix) -> ComplexMatrix,
    {
        let mut superop = ComplexMatrix::zeros(output_dim * output_dim, input_dim * input_dim);
        for i in 0..input_dim {
            for j in 0..input_dim {
                let out = map(&matrix_unit(input_dim, i, j));
                superop.set_column(i * input_dim + j, &vectorize(&out));
            }
        }
        Self {
            superop,
            input_dim,
            output_dim,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            superop: ComplexMatrix::identity(n * n, n * n),
            input_dim: n,
            output_dim: n,
        }
    }

    /// `X -> U X U^dagger`.
    pub fn from_unitary(u: &Unitary) -> Self {
        Self::conjugation(u.matrix())
    }

    /// `X -> K X K^dagger` for any operator `K`.
    pub fn conjugation(k: &ComplexMatrix) -> Self {
        Self {
            superop: kron(k, &k.conjugate()),
            input_dim: k.ncols(),
            output_dim: k.nrows(),
        }
    }

    pub fn zero(input_dim: usize, output_dim: usize) -> Self {
        Self {
            superop: ComplexMatrix::zeros(output_dim * output_dim, input_dim * input_dim),
            input_dim,
            output_dim,
        }
    }

    pub fn superoperator(&self) -> &ComplexMatrix {
        &self.superop
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(x.shape(), (self.input_dim, self.input_dim), "operator shape");
        unvectorize(&(&self.superop * vectorize(x)), self.output_dim, self.output_dim)
    }

    /// `self . first` (apply `first`, then `self`).
    pub fn compose(&self, first: &QuantumChannel) -> Self {
        assert_eq!(first.output_dim, self.input_dim, "composition dims");
        Self {
            superop: &self.superop * &first.superop,
            input_dim: first.input_dim,
            output_dim: self.output_dim,
        }
    }

    /// `m`-fold self-composition by repeated multiplication.
    pub fn power(&self, m: usize) -> Self {
        assert_eq!(self.input_dim, self.output_dim);
        let mut acc = Self::identity(self.input_dim);
        for _ in 0..m {
            acc = self.compose(&acc);
        }
        acc
    }

    pub fn add(&self, other: &QuantumChannel) -> Self {
        Self {
            superop: &self.superop + &other.superop,
            ..self.clone()
        }
    }

    pub fn sub(&self, other: &QuantumChannel) -> Self {
        Self {
            superop: &self.superop - &other.superop,
            ..self.clone()
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            superop: self.superop.scale(s),
            ..self.clone()
        }
    }

    /// Choi operator `sum_ij |i><j| (x) Phi(|i><j|)` on input (x) output.
    pub fn choi(&self) -> ComplexMatrix {
        let n = self.input_dim;
        let k = self.output_dim;
        let mut c = ComplexMatrix::zeros(n * k, n * k);
        for i in 0..n {
            for j in 0..n {
                let col = self.superop.column(i * n + j);
                for a in 0..k {
                    for b in 0..k {
                        c[(i * k + a, j * k + b)] = col[a * k + b];
                    }
                }
            }
        }
        c
    }

    /// Smallest eigenvalue of the (Hermitian part of the) Choi operator.
    pub fn choi_min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.choi())
    }

    /// `max_ij |Tr Phi(|i><j|) - delta_ij|`, zero iff the dual map is unital.
    pub fn trace_preservation_defect(&self) -> f64 {
        let n = self.input_dim;
        let k = self.output_dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let col = self.superop.column(i * n + j);
                let tr: C64 = (0..k).map(|a| col[a * k + a]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((tr - C64::new(expect, 0.0)).norm());
            }
        }
        worst
    }

    /// `max_ij |Tr Phi(|i><j|)| - delta_ij` as a trace-non-increase check
    /// is awkward off the diagonal; this returns `max_i Tr Phi(|i><i|) - 1`.
    pub fn trace_excess(&self) -> f64 {
        let n = self.input_dim;
        (0..n)
            .map(|i| trace(&self.apply(&matrix_unit(n, i, i))).re - 1.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_cptp(&self, tp_tol: f64, cp_tol: f64) -> bool {
        self.trace_preservation_defect() <= tp_tol && self.choi_min_eigenvalue() >= -cp_tol
    }

    /// `(Phi (x) id)(X)` for `X` on input (x) reference.
    pub fn apply_on_first(&self, x: &ComplexMatrix, reference_dim: usize) -> ComplexMatrix {
        let n = self.input_dim;
        let k = self.output_dim;
        let r = reference_dim;
        assert_eq!(x.shape(), (n * r, n * r), "operator shape");
        let mut out = ComplexMatrix::zeros(k * r, k * r);
        for p in 0..r {
            for q in 0..r {
                let block = ComplexMatrix::from_fn(n, n, |i, j| x[(i * r + p, j * r + q)]);
                let mapped = self.apply(&block);
                for a in 0..k {
                    for b in 0..k {
                        out[(a * r + p, b * r + q)] = mapped[(a, b)];
                    }
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &QuantumChannel) -> f64 {
        max_abs_diff(&self.superop, &other.superop)
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson::from(&self.superop)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ginibre, haar_unitary, identity, random_density};
    use crate::rng::seeded;

    #[test]
    fn unitary_channel_matches_conjugation() {
        let mut rng = seeded(41);
        let u = haar_unitary(3, &mut rng);
        let x = ginibre(3, &mut rng);
        let ch = QuantumChannel::from_unitary(&u);
        let direct = u.matrix() * &x * u.matrix().adjoint();
        assert!(max_abs_diff(&ch.apply(&x), &direct) < 1e-12);
        assert!(ch.is_cptp(1e-10, 1e-10));
    }

    #[test]
    fn linear_map_tabulation_agrees() {
        let mut rng = seeded(42);
        let a = ginibre(2, &mut rng);
        let b = ginibre(2, &mut rng);
        let ch = QuantumChannel::from_linear_map(2, 2, |x| &a * x * &b);
        let x = ginibre(2, &mut rng);
        assert!(max_abs_diff(&ch.apply(&x), &(&a * &x * &b)) < 1e-12);
        let direct = kron(&a, &b.transpose());
        assert!(max_abs_diff(ch.superoperator(), &direct) < 1e-12);
    }

    #[test]
    fn composition_order() {
        let mut rng = seeded(43);
        let u = haar_unitary(2, &mut rng);
        let v = haar_unitary(2, &mut rng);
        let cu = QuantumChannel::from_unitary(&u);
        let cv = QuantumChannel::from_unitary(&v);
        let uv = QuantumChannel::from_unitary(&u.compose(&v));
        assert!(cu.compose(&cv).max_abs_diff(&uv) < 1e-12);
        assert!(cu.power(3).max_abs_diff(&QuantumChannel::from_unitary(&u.pow(3))) < 1e-12);
    }

    #[test]
    fn depolarizing_choi_and_tp() {
        let n = 3;
        let dep = QuantumChannel::from_linear_map(n, n, |x| {
            identity(n) * (trace(x) / C64::new(n as f64, 0.0))
        });
        assert!(dep.trace_preservation_defect() < 1e-12);
        assert!((dep.choi_min_eigenvalue() - 1.0 / n as f64).abs() < 1e-12);
        let not_cp = QuantumChannel::from_linear_map(2, 2, |x| x.transpose());
        assert!(not_cp.choi_min_eigenvalue() < -0.5);
    }

    #[test]
    fn apply_on_first_product() {
        let mut rng = seeded(44);
        let u = haar_unitary(2, &mut rng);
        let a = random_density(2, &mut rng);
        let b = random_density(3, &mut rng);
        let ch = QuantumChannel::from_unitary(&u);
        let out = ch.apply_on_first(&kron(&a, &b), 3);
        assert!(max_abs_diff(&out, &kron(&ch.apply(&a), &b)) < 1e-12);
    }
}
