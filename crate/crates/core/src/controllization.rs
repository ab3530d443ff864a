//! Universal controllization of an unknown evolution.
//!
//! Registers are ordered control (qubit) (x) ancilla (d) (x) target (d).
//! The pseudo-controlled gate swaps ancilla and target on control `|0>`, so
//! the target evolves only on control `|1>`. Conjugating it by a random
//! element of a depolarizing set and discarding a maximally mixed ancilla
//! gives the channel `Gamma`, which acts on control (x) target as
//!
//! - `|0><0|` block: unchanged,
//! - `|1><1|` block: `rho -> U rho U^dagger`,
//! - `|1><0|` block: `rho -> conj(Tr U / d) U rho`,
//! - `|0><1|` block: `rho -> (Tr U / d) rho U^dagger`.

use rand::Rng;

use crate::channel::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{
    coherence_factor, identity, kron, kron_all, matrix_unit, partial_trace_matrix, phase_factor,
    swap_operator, trace, trace_norm, ComplexMatrix, ComplexVector, DensityMatrix, Hamiltonian,
    Unitary, C64, ONE,
};

/// Default work budget for explicit `m`-fold composition, in units of
/// `m * (2d)^4`.
pub const DEFAULT_COMPOSITION_BUDGET: u128 = 1 << 34;

/// A finite set of unitaries whose uniform twirl is the completely
/// depolarizing map `A -> (Tr A / d) I`.
#[derive(Debug, Clone)]
pub struct RandomizingSet {
    operators: Vec<ComplexMatrix>,
    dim: usize,
}

impl RandomizingSet {
    /// Wraps user-supplied operators after checking unitarity to 1e-10.
    /// The depolarizing property is the caller's responsibility; see
    /// [`RandomizingSet::depolarizing_defect`].
    pub fn from_operators(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = operators
            .first()
            .map(|o| o.nrows())
            .ok_or_else(|| Error::InvalidArgument("empty randomizing set".into()))?;
        for op in &operators {
            if op.shape() != (dim, dim) {
                return Err(Error::DimMismatch("randomizing operators differ in shape".into()));
            }
            Unitary::new(op.clone())?;
        }
        Ok(Self { operators, dim })
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(1/D) sum_r sigma_r A sigma_r^dagger`.
    pub fn twirl(&self, a: &ComplexMatrix) -> ComplexMatrix {
        let sum = self
            .operators
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, s| {
                acc + s * a * s.adjoint()
            });
        sum.unscale(self.len() as f64)
    }

    /// `max |twirl(A) - (Tr A / d) I|` over entries.
    pub fn depolarizing_defect(&self, a: &ComplexMatrix) -> f64 {
        let target = identity(self.dim) * (trace(a) / C64::new(self.dim as f64, 0.0));
        crate::linalg::max_abs_diff(&self.twirl(a), &target)
    }
}

/// Shift-and-clock operators `X^a Z^b`, `a, b in 0..d`, with `D = d^2`.
pub fn heisenberg_weyl_set(d: usize) -> Result<RandomizingSet> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("need d >= 2, got {d}")));
    }
    let mut shift = ComplexMatrix::zeros(d, d);
    let mut clock = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        shift[((j + 1) % d, j)] = ONE;
        clock[(j, j)] = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / d as f64);
    }
    let mut operators = Vec::with_capacity(d * d);
    let mut xa = identity(d);
    for _ in 0..d {
        let mut zb = identity(d);
        for _ in 0..d {
            operators.push(&xa * &zb);
            zb = &zb * &clock;
        }
        xa = &xa * &shift;
    }
    Ok(RandomizingSet {
        operators,
        dim: d,
    })
}

/// Hamiltonian, total time, slice count and randomizing set.
#[derive(Debug, Clone)]
pub struct ControllizationSpec {
    h: Hamiltonian,
    t: f64,
    m: usize,
    set: RandomizingSet,
}

impl ControllizationSpec {
    pub fn new(h: Hamiltonian, t: f64, m: usize, set: RandomizingSet) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("m must be at least 1".into()));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
        }
        if set.dim() != h.dim() {
            return Err(Error::DimMismatch(format!(
                "randomizing set acts on {}, Hamiltonian on {}",
                set.dim(),
                h.dim()
            )));
        }
        Ok(Self { h, t, m, set })
    }

    /// Same, with the Heisenberg-Weyl set of matching dimension.
    pub fn with_default_set(h: Hamiltonian, t: f64, m: usize) -> Result<Self> {
        let set = heisenberg_weyl_set(h.dim())?;
        Self::new(h, t, m, set)
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.h
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn iterations(&self) -> usize {
        self.m
    }

    pub fn set(&self) -> &RandomizingSet {
        &self.set
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// `U(t/m)`.
    pub fn slice_unitary(&self) -> Unitary {
        self.h.evolve(self.t / self.m as f64)
    }

    /// `U(t)`.
    pub fn total_unitary(&self) -> Unitary {
        self.h.evolve(self.t)
    }

    /// `a_{U(t/m)}`.
    pub fn slice_coherence(&self) -> f64 {
        coherence_factor(&self.slice_unitary())
    }

    /// `(a_{U(t/m)})^m`.
    pub fn coherence(&self) -> f64 {
        self.slice_coherence().powi(self.m as i32)
    }

    /// `phi_{U(t/m)}`.
    pub fn slice_phase(&self) -> Result<f64> {
        phase_factor(&self.slice_unitary())
    }
}

/// `W = F (I (x) I (x) U) F` with `F = |0><0| (x) SWAP + |1><1| (x) I`.
pub fn pseudo_control_gate(u: &Unitary) -> Unitary {
    let d = u.dim();
    let p0 = matrix_unit(2, 0, 0);
    let p1 = matrix_unit(2, 1, 1);
    let f = kron(&p0, &swap_operator(d)) + kron(&p1, &identity(d * d));
    let evolve = kron_all(&[&identity(2), &identity(d), u.matrix()]);
    let w = &f * evolve * &f;
    Unitary::new(w).expect("product of unitaries")
}

/// `V^(r) = (I (x) sigma_r (x) I) W (I (x) sigma_r^dagger (x) I)` for every r.
fn randomized_gates(u: &Unitary, set: &RandomizingSet) -> Vec<ComplexMatrix> {
    let d = u.dim();
    let w = pseudo_control_gate(u);
    set.operators()
        .iter()
        .map(|s| {
            let sr = kron_all(&[&identity(2), s, &identity(d)]);
            let sr_dag = sr.adjoint();
            &sr * w.matrix() * sr_dag
        })
        .collect()
}

/// Places `I/d` on the ancilla slot of a control (x) target operator.
fn embed_ancilla(x: &ComplexMatrix, d: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(2 * d * d, 2 * d * d);
    let w = C64::new(1.0 / d as f64, 0.0);
    for c in 0..2 {
        for cp in 0..2 {
            for a in 0..d {
                for i in 0..d {
                    for j in 0..d {
                        out[(c * d * d + a * d + i, cp * d * d + a * d + j)] =
                            x[(c * d + i, cp * d + j)] * w;
                    }
                }
            }
        }
    }
    out
}

fn discard_ancilla(x: &ComplexMatrix, d: usize) -> ComplexMatrix {
    partial_trace_matrix(x, &[2, d, d], &[0, 2]).expect("dims are consistent")
}

/// The twirled single-slice channel on control (x) ancilla (x) target,
/// `(1/D) sum_r V^(r) . V^(r)dagger`.
pub fn randomized_slice_channel(u: &Unitary, set: &RandomizingSet) -> QuantumChannel {
    let gates = randomized_gates(u, set);
    let n = 2 * u.dim() * u.dim();
    let scale = 1.0 / gates.len() as f64;
    QuantumChannel::from_linear_map(n, n, |x| {
        gates
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, v| acc + v * x * v.adjoint())
            .scale(scale)
    })
}

/// `Gamma_U` built from the twirled pseudo-controlled gate with ancilla
/// `I/d`, ancilla traced out.
pub fn gamma_channel_for(u: &Unitary, set: &RandomizingSet) -> QuantumChannel {
    let d = u.dim();
    let gates = randomized_gates(u, set);
    let scale = 1.0 / gates.len() as f64;
    QuantumChannel::from_linear_map(2 * d, 2 * d, |x| {
        let big = embed_ancilla(x, d);
        let n = big.nrows();
        let avg = gates
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, v| acc + v * &big * v.adjoint())
            .scale(scale);
        discard_ancilla(&avg, d)
    })
}

/// Exact single-slice channel `Gamma_{U(t/m)}`.
pub fn gamma_channel(spec: &ControllizationSpec) -> QuantumChannel {
    gamma_channel_for(&spec.slice_unitary(), spec.set())
}

/// Closed form of `Gamma_U^k`: the `|1><0|` block picks up
/// `conj(Tr U / d)^k` and the target evolves by `U^k` on control `|1>`.
pub fn gamma_power_closed_form(u: &Unitary, k: u64) -> QuantumChannel {
    let d = u.dim();
    let base = (u.trace() / C64::new(d as f64, 0.0)).conj();
    let gamma = match u32::try_from(k) {
        Ok(k32) => base.powu(k32),
        Err(_) => C64::from_polar(base.norm().powf(k as f64), base.arg() * k as f64),
    };
    let v = u.pow(k);
    controlled_blocks(v.matrix(), gamma)
}

/// Channel on control (x) target with the block action
/// `(00) id, (11) V.V^dagger, (10) gamma V., (01) conj(gamma) .V^dagger`.
pub(crate) fn controlled_blocks(v: &ComplexMatrix, gamma: C64) -> QuantumChannel {
    let d = v.nrows();
    let v_dag = v.adjoint();
    QuantumChannel::from_linear_map(2 * d, 2 * d, |x| {
        let mut out = ComplexMatrix::zeros(2 * d, 2 * d);
        let b00 = x.view((0, 0), (d, d)).into_owned();
        let b01 = x.view((0, d), (d, d)).into_owned();
        let b10 = x.view((d, 0), (d, d)).into_owned();
        let b11 = x.view((d, d), (d, d)).into_owned();
        out.view_mut((0, 0), (d, d)).copy_from(&b00);
        out.view_mut((0, d), (d, d)).copy_from(&((&b01 * &v_dag) * gamma.conj()));
        out.view_mut((d, 0), (d, d)).copy_from(&((v * &b10) * gamma));
        out.view_mut((d, d), (d, d)).copy_from(&(v * &b11 * &v_dag));
        out
    })
}

/// `Gamma^m` in closed form.
pub fn gamma_iterated(spec: &ControllizationSpec) -> QuantumChannel {
    gamma_power_closed_form(&spec.slice_unitary(), spec.iterations() as u64)
}

/// `Gamma^m` by explicit superoperator composition of [`gamma_channel`].
pub fn gamma_iterated_composed(spec: &ControllizationSpec, budget: u128) -> Result<QuantumChannel> {
    let n = 2 * spec.dim() as u128;
    let required = spec.iterations() as u128 * n.pow(4);
    if required > budget {
        return Err(Error::IterationOverflow { required, budget });
    }
    Ok(gamma_channel(spec).power(spec.iterations()))
}

/// `C_U^(g) = |0><0| (x) I + e^{ig} |1><1| (x) U` as a unitary channel.
pub fn controlled_up_to_phase(u: &Unitary, g: f64) -> QuantumChannel {
    QuantumChannel::conjugation(&controlled_unitary_matrix(u.matrix(), C64::from_polar(1.0, g)))
}

pub(crate) fn controlled_unitary_matrix(u: &ComplexMatrix, phase: C64) -> ComplexMatrix {
    let d = u.nrows();
    kron(&matrix_unit(2, 0, 0), &identity(d)) + kron(&matrix_unit(2, 1, 1), &(u * phase))
}

/// The comparison target `C_{U(t)}^(m phi_{U(t/m)})`.
pub fn reference_channel(spec: &ControllizationSpec) -> Result<QuantumChannel> {
    let g = spec.iterations() as f64 * spec.slice_phase()?;
    Ok(controlled_up_to_phase(&spec.total_unitary(), g))
}

/// `1 - (a_{U(t/m)})^m`.
pub fn diamond_distance_closed_form(spec: &ControllizationSpec) -> f64 {
    1.0 - spec.coherence()
}

/// Trace norm of `((C - Gamma^m) (x) id)(|Psi><Psi|)` for the input
/// `|Psi> = (|0> + |1>)/sqrt 2 (x) |Phi+>`, `|Phi+>` maximally entangled
/// between target and a `d`-dimensional reference.
pub fn diamond_witness(spec: &ControllizationSpec) -> Result<f64> {
    let d = spec.dim();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let control = ComplexVector::from_vec(vec![C64::new(s, 0.0), C64::new(s, 0.0)]);
    let mut phi = ComplexVector::zeros(d * d);
    for i in 0..d {
        phi[i * d + i] = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    }
    let psi = control.kronecker(&phi);
    let rho = &psi * psi.adjoint();
    let diff = reference_channel(spec)?.sub(&gamma_iterated(spec));
    Ok(trace_norm(&diff.apply_on_first(&rho, d)))
}

/// `(m phi_{U(t/m)}, Tr H t / d)`.
pub fn phase_drift(h: &Hamiltonian, t: f64, m: usize) -> Result<(f64, f64)> {
    let slice = t / m as f64;
    let spread = h.delta_max() * slice.abs();
    if spread >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::WindowViolation(spread));
    }
    let phi = phase_factor(&h.evolve(slice))?;
    Ok((m as f64 * phi, h.trace() * t / h.dim() as f64))
}

/// `(sqrt(cos(Delta t/m)), 1 - Delta^2 t^2 / (4 m^2))`.
pub fn coherence_lower_bound(delta_max: f64, t: f64, m: usize) -> Result<(f64, f64)> {
    let spread = delta_max * t;
    if spread.is_nan() || spread >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::WindowViolation(spread));
    }
    let x = spread / m as f64;
    Ok((x.cos().sqrt(), 1.0 - x * x / 4.0))
}

/// One realisation of the randomized circuit: `m` slices, each with a fresh
/// uniformly drawn `sigma_r`.
pub fn sample_random_circuit<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    spec: &ControllizationSpec,
    rng: &mut R,
) -> Result<DensityMatrix> {
    let sequence: Vec<usize> = (0..spec.iterations())
        .map(|_| rng.random_range(0..spec.set().len()))
        .collect();
    run_circuit_sequence(rho, spec, &sequence)
}

/// The randomized circuit for a fixed choice of `sigma` indices.
pub fn run_circuit_sequence(
    rho: &DensityMatrix,
    spec: &ControllizationSpec,
    sequence: &[usize],
) -> Result<DensityMatrix> {
    let d = spec.dim();
    if rho.dim() != 2 * d {
        return Err(Error::DimMismatch(format!(
            "expected control (x) target of size {}, got {}",
            2 * d,
            rho.dim()
        )));
    }
    if let Some(&bad) = sequence.iter().find(|&&r| r >= spec.set().len()) {
        return Err(Error::InvalidArgument(format!("sigma index {bad} out of range")));
    }
    let gates = randomized_gates(&spec.slice_unitary(), spec.set());
    let mut state = embed_ancilla(rho.matrix(), d);
    for &r in sequence {
        state = &gates[r] * state * gates[r].adjoint();
    }
    DensityMatrix::new_unchecked(discard_ancilla(&state, d), vec![2, d])
}

/// Extracts block `(b, b')` of a control (x) target operator.
pub fn control_block(x: &ComplexMatrix, b: usize, bp: usize) -> ComplexMatrix {
    let d = x.nrows() / 2;
    x.view((b * d, bp * d), (d, d)).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{
        ginibre, max_abs_diff, random_density, random_hamiltonian, Hamiltonian,
    };
    use crate::rng::seeded;

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![ONE, -ONE]))
    }

    #[test]
    fn qubit_set_is_pauli_twirl() {
        let set = heisenberg_weyl_set(2).unwrap();
        assert_eq!(set.len(), 4);
        assert!(crate::linalg::max_abs(&set.twirl(&pauli_z())) < 1e-15);
        assert!(max_abs_diff(&set.twirl(&identity(2)), &identity(2)) < 1e-15);
    }

    #[test]
    fn depolarizing_property() {
        let mut rng = seeded(51);
        for d in 2..=5 {
            let set = heisenberg_weyl_set(d).unwrap();
            assert_eq!(set.len(), d * d);
            for op in set.operators() {
                assert!(crate::linalg::unitarity_defect(op) < 1e-10);
            }
            for _ in 0..20 {
                let a = ginibre(d, &mut rng);
                assert!(set.depolarizing_defect(&a) < 1e-12);
            }
        }
        assert!(heisenberg_weyl_set(1).is_err());
    }

    #[test]
    fn pseudo_gate_branches() {
        let mut rng = seeded(52);
        let d = 3;
        let u = crate::linalg::haar_unitary(d, &mut rng);
        let w = pseudo_control_gate(&u);
        // Control |1>: target evolves.
        let on = kron_all(&[&identity(d), u.matrix()]);
        let w11 = w.matrix().view((d * d, d * d), (d * d, d * d)).into_owned();
        assert!(max_abs_diff(&w11, &on) < 1e-12);
        // Control |0>: ancilla evolves.
        let off = kron_all(&[u.matrix(), &identity(d)]);
        let w00 = w.matrix().view((0, 0), (d * d, d * d)).into_owned();
        assert!(max_abs_diff(&w00, &off) < 1e-12);
    }

    #[test]
    fn pseudo_gate_block_identity() {
        // (j,k) block of W (|j><k| (x) I/d (x) rho_jk) W^dagger is
        // U((k-j)tau)/d (x) U(j tau) rho_jk U(k tau)^dagger.
        let mut rng = seeded(53);
        let d = 2;
        let h = random_hamiltonian(d, 1.0, &mut rng);
        let tau = 0.3;
        let w = pseudo_control_gate(&h.evolve(tau));
        for j in 0..2 {
            for k in 0..2 {
                let rho_jk = ginibre(d, &mut rng);
                let input = kron_all(&[
                    &matrix_unit(2, j, k),
                    &identity(d).unscale(d as f64),
                    &rho_jk,
                ]);
                let out = w.matrix() * input * w.matrix().adjoint();
                let n = d * d;
                let block = out.view((j * n, k * n), (n, n)).into_owned();
                let anc = h.evolve((k as f64 - j as f64) * tau).matrix().unscale(d as f64);
                let tgt = h.evolve(j as f64 * tau).matrix()
                    * &rho_jk
                    * h.evolve(k as f64 * tau).matrix().adjoint();
                assert!(max_abs_diff(&block, &kron(&anc, &tgt)) < 1e-12);
            }
        }
    }

    #[test]
    fn gamma_is_cptp_and_matches_block_form() {
        let mut rng = seeded(54);
        for d in 2..=4 {
            let h = random_hamiltonian(d, 1.0, &mut rng);
            let spec = ControllizationSpec::with_default_set(h, 0.7, 1).unwrap();
            let g = gamma_channel(&spec);
            assert!(g.is_cptp(1e-10, 1e-8));
            let closed = gamma_power_closed_form(&spec.slice_unitary(), 1);
            assert!(g.max_abs_diff(&closed) < 1e-12);
        }
    }

    #[test]
    fn gamma_of_identity_is_identity() {
        let h = Hamiltonian::from_diagonal(&[0.0, 0.0, 0.0]);
        let spec = ControllizationSpec::with_default_set(h, 1.0, 3).unwrap();
        let id = QuantumChannel::identity(6);
        assert!(gamma_channel(&spec).max_abs_diff(&id) < 1e-12);
        assert!(gamma_iterated(&spec).max_abs_diff(&id) < 1e-12);
    }

    #[test]
    fn decoupling_factorises() {
        let mut rng = seeded(55);
        let d = 2;
        let h = random_hamiltonian(d, 1.3, &mut rng);
        let spec = ControllizationSpec::with_default_set(h, 1.0, 2).unwrap();
        let v = randomized_slice_channel(&spec.slice_unitary(), spec.set());
        let g = gamma_channel(&spec);
        for _ in 0..50 {
            let rho = random_density(2 * d, &mut rng);
            let lhs = v.apply(&embed_ancilla(&rho, d));
            let rhs = embed_ancilla(&g.apply(&rho), d);
            assert!(max_abs_diff(&lhs, &rhs) < 1e-10);
        }
    }

    #[test]
    fn iterated_examples() {
        let h = Hamiltonian::from_diagonal(&[0.0, 1.0]);
        let spec = ControllizationSpec::with_default_set(h.clone(), 1.0, 4).unwrap();
        let closed = gamma_iterated(&spec);
        let composed = gamma_iterated_composed(&spec, DEFAULT_COMPOSITION_BUDGET).unwrap();
        assert!(closed.max_abs_diff(&composed) < 1e-9);
        // Off-diagonal (1,0) scale is conj(Tr U(1/4)/2)^4.
        let tr = (ONE + C64::from_polar(1.0, -0.25)) / C64::new(2.0, 0.0);
        let x = matrix_unit(4, 2, 0);
        let out = closed.apply(&x);
        assert!((out[(2, 0)] - tr.conj().powu(4)).norm() < 1e-12);
        let one = ControllizationSpec::with_default_set(h, 1.0, 1).unwrap();
        assert!(gamma_iterated(&one).max_abs_diff(&gamma_channel(&one)) < 1e-12);
    }

    #[test]
    fn composition_budget() {
        let h = Hamiltonian::from_diagonal(&[0.0, 1.0]);
        let spec = ControllizationSpec::with_default_set(h, 1.0, 8).unwrap();
        let err = gamma_iterated_composed(&spec, 100).unwrap_err();
        assert!(matches!(err, Error::IterationOverflow { .. }));
    }

    #[test]
    fn controlled_phase_examples() {
        let mut rng = seeded(56);
        let u = crate::linalg::haar_unitary(2, &mut rng);
        let c = controlled_unitary_matrix(u.matrix(), C64::from_polar(1.0, 0.4));
        assert!(crate::linalg::unitarity_defect(&c) < 1e-12);
        let id = controlled_up_to_phase(&Unitary::identity(3), 0.0);
        assert!(id.max_abs_diff(&QuantumChannel::identity(6)) < 1e-12);
    }

    #[test]
    fn diamond_examples() {
        let h = Hamiltonian::from_diagonal(&[0.5, 0.5]);
        let spec = ControllizationSpec::with_default_set(h, 1.0, 3).unwrap();
        assert!(diamond_distance_closed_form(&spec).abs() < 1e-15);
        assert!(diamond_witness(&spec).unwrap() < 1e-12);
        assert!((1.0 - 0.9f64.powi(2) - 0.19).abs() < 1e-15);
    }

    #[test]
    fn witness_saturates() {
        let mut rng = seeded(57);
        for d in 2..=3 {
            let h = random_hamiltonian(d, 1.0, &mut rng);
            let spec = ControllizationSpec::with_default_set(h, 1.2, 3).unwrap();
            let w = diamond_witness(&spec).unwrap();
            assert!((w - diamond_distance_closed_form(&spec)).abs() < 1e-8);
        }
    }

    #[test]
    fn phase_drift_examples() {
        let h = Hamiltonian::from_diagonal(&[0.0, 1.0]);
        let (_, target) = phase_drift(&h, 1.0, 4).unwrap();
        assert!((target - 0.5).abs() < 1e-15);
        let gaps: Vec<f64> = [4, 16, 64]
            .iter()
            .map(|&m| {
                let (a, b) = phase_drift(&h, 1.0, m).unwrap();
                (a - b).abs()
            })
            .collect();
        assert!(gaps[1] <= gaps[0] && gaps[2] <= gaps[1]);
        let sym = Hamiltonian::from_diagonal(&[-0.7, 0.7]);
        for m in 1..6 {
            assert!(phase_drift(&sym, 1.0, m).unwrap().0.abs() < 1e-12);
        }
        let flat = Hamiltonian::from_diagonal(&[0.3, 0.3, 0.3]);
        for m in 1..6 {
            assert!((phase_drift(&flat, 2.0, m).unwrap().0 - 0.6).abs() < 1e-12);
        }
    }

    #[test]
    fn coherence_bound_examples() {
        assert_eq!(coherence_lower_bound(1.0, 0.0, 3).unwrap(), (1.0, 1.0));
        let (a, b) = coherence_lower_bound(1.0, 1.0, 2).unwrap();
        assert!((a - 0.877_582_561_890_372_8f64.sqrt()).abs() < 1e-15);
        assert!(a < b);
        assert!((b - 0.9375).abs() < 1e-15);
        assert!(matches!(
            coherence_lower_bound(2.0, 1.0, 2),
            Err(Error::WindowViolation(_))
        ));
        let mut rng = seeded(58);
        for trial in 0..1000 {
            let h = random_hamiltonian(4, 1.0, &mut rng);
            let m = 2 + trial % 7;
            let (lower, _) = coherence_lower_bound(1.0, 1.0, m).unwrap();
            assert!(coherence_factor(&h.evolve(1.0 / m as f64)) >= lower - 1e-12);
        }
    }

    #[test]
    fn random_circuit_identity_and_pinning() {
        let mut rng = seeded(59);
        let d = 2;
        let rho = DensityMatrix::new(random_density(2 * d, &mut rng), vec![2, d]).unwrap();
        let zero = Hamiltonian::from_diagonal(&[0.0, 0.0]);
        let spec0 = ControllizationSpec::with_default_set(zero, 1.0, 3).unwrap();
        let out = sample_random_circuit(&rho, &spec0, &mut rng).unwrap();
        assert!(max_abs_diff(out.matrix(), rho.matrix()) < 1e-12);

        // sigma_0 = I: the pinned sequence is W alone.
        let h = random_hamiltonian(d, 1.0, &mut rng);
        let spec = ControllizationSpec::with_default_set(h.clone(), 0.8, 1).unwrap();
        let pinned = run_circuit_sequence(&rho, &spec, &[0]).unwrap();
        let u = h.evolve(0.8);
        let a = (u.trace() / C64::new(d as f64, 0.0)).conj();
        let r10 = control_block(rho.matrix(), 1, 0);
        let expect = u.matrix() * r10 * a;
        assert!(max_abs_diff(&control_block(pinned.matrix(), 1, 0), &expect) < 1e-12);
    }

    #[test]
    fn random_circuit_average_converges() {
        let mut rng = seeded(60);
        let d = 2;
        let h = random_hamiltonian(d, 1.2, &mut rng);
        let spec = ControllizationSpec::with_default_set(h, 1.0, 3).unwrap();
        let rho = DensityMatrix::new(random_density(2 * d, &mut rng), vec![2, d]).unwrap();
        let trials = 10_000;
        let mut acc = ComplexMatrix::zeros(2 * d, 2 * d);
        for _ in 0..trials {
            acc += sample_random_circuit(&rho, &spec, &mut rng).unwrap().matrix();
        }
        let mean = acc.unscale(trials as f64);
        let exact = gamma_iterated(&spec).apply(rho.matrix());
        assert!(trace_norm(&(mean - exact)) / 2.0 <= 0.02);
    }
}
