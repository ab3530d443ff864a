//! Quality functionals of an energy measurement and its running time.
//!
//! For an instrument `{(x_j, I_j)}` and a Hamiltonian with eigenvectors
//! `|E_i^lambda>`:
//!
//! - `R1 = max_{i, lambda} sum_j Tr[I_j(|E_i^l><E_i^l|)] (E_i - x_j)^2`,
//! - `R2 = sum_i max_lambda || sum_j I_j(|E_i^l><E_i^l|) - |E_i^l><E_i^l| ||_1`.
//!
//! The maximum over `lambda` is exact when the eigenspace is
//! one-dimensional or every map acts as one scalar on the eigenspace's
//! matrix units; otherwise it is the best of the basis vectors and a batch
//! of Haar-random states in the eigenspace.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{
    max_abs, max_abs_diff, phase_factor, random_state_vector, trace, trace_norm, ComplexMatrix,
    ComplexVector, Hamiltonian, C64,
};
use crate::pea::{min_iterations, MeasurementInstrument};

pub const DEFAULT_LAMBDA_SAMPLES: usize = 64;

/// Per-level contributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMetric {
    pub energy: f64,
    pub multiplicity: usize,
    pub r1: f64,
    pub r2: f64,
    /// True when the maximum over the eigenspace is exact.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub r1: f64,
    pub r2: f64,
    pub levels: Vec<LevelMetric>,
    pub lambda_samples: usize,
}

/// Evolution-time accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceLedger {
    pub total_evolution_time: f64,
    /// Black-box calls per rung (or per search step).
    pub gate_calls: Vec<u64>,
    /// Duration of each call, aligned with `gate_calls`.
    pub call_durations: Vec<f64>,
}

impl ResourceLedger {
    pub fn empty() -> Self {
        Self {
            total_evolution_time: 0.0,
            gate_calls: Vec::new(),
            call_durations: Vec::new(),
        }
    }

    /// `sum_k gate_calls[k] * call_durations[k]`.
    pub fn consumed_time(&self) -> f64 {
        self.gate_calls
            .iter()
            .zip(&self.call_durations)
            .map(|(&n, &tau)| n as f64 * tau)
            .sum()
    }

    pub fn record(&mut self, calls: u64, duration: f64) {
        self.gate_calls.push(calls);
        self.call_durations.push(duration);
        self.total_evolution_time += calls as f64 * duration;
    }
}

/// The states over which a level's maximum is taken, and whether the
/// maximum is exact.
fn level_states<R: Rng + ?Sized>(
    instr: &MeasurementInstrument,
    basis: &ComplexMatrix,
    samples: usize,
    rng: &mut R,
) -> (Vec<ComplexVector>, bool) {
    let k = basis.ncols();
    let first = basis.column(0).into_owned();
    if k == 1 || acts_as_scalar(instr, basis) {
        return (vec![first], true);
    }
    let mut states: Vec<ComplexVector> = (0..k).map(|c| basis.column(c).into_owned()).collect();
    for _ in 0..samples {
        let coeffs = random_state_vector(k, rng);
        states.push(basis * coeffs);
    }
    (states, false)
}

/// Whether each map sends every `|e_a><e_b|` of the eigenspace to
/// `c_j |e_a><e_b|` with one scalar `c_j`.
fn acts_as_scalar(instr: &MeasurementInstrument, basis: &ComplexMatrix) -> bool {
    let k = basis.ncols();
    instr.maps().iter().all(|map| {
        let mut scalar: Option<C64> = None;
        for a in 0..k {
            for b in 0..k {
                let ea = basis.column(a).into_owned();
                let eb = basis.column(b).into_owned();
                let unit = &ea * eb.adjoint();
                let out = map.apply(&unit);
                let c = (ea.adjoint() * &out * &eb)[(0, 0)];
                let tol = 1e-10 * (1.0 + max_abs(&out));
                if max_abs_diff(&out, &(&unit * c)) > tol {
                    return false;
                }
                match scalar {
                    None => scalar = Some(c),
                    Some(s) if (s - c).norm() > tol => return false,
                    _ => {}
                }
            }
        }
        true
    })
}

fn r1_of_state(instr: &MeasurementInstrument, energy: f64, rho: &ComplexMatrix) -> f64 {
    instr
        .maps()
        .iter()
        .zip(instr.outcomes())
        .map(|(map, &x)| trace(&map.apply(rho)).re * (energy - x).powi(2))
        .sum()
}

fn r2_of_state(total: &crate::channel::QuantumChannel, rho: &ComplexMatrix) -> f64 {
    trace_norm(&(total.apply(rho) - rho))
}

/// R1, R2 and their per-level breakdown.
pub fn evaluate<R: Rng + ?Sized>(
    instr: &MeasurementInstrument,
    h: &Hamiltonian,
    lambda_samples: usize,
    rng: &mut R,
) -> Result<MetricReport> {
    if instr.dim() != h.dim() {
        return Err(crate::error::Error::DimMismatch(format!(
            "instrument acts on {}, Hamiltonian on {}",
            instr.dim(),
            h.dim()
        )));
    }
    let total = instr.total_map();
    let mut levels = Vec::with_capacity(h.num_levels());
    for (&energy, basis) in h.energies().iter().zip(h.eigenbases()) {
        let (states, exact) = level_states(instr, basis, lambda_samples, rng);
        let mut r1 = 0.0_f64;
        let mut r2 = 0.0_f64;
        for psi in &states {
            let rho = psi * psi.adjoint();
            r1 = r1.max(r1_of_state(instr, energy, &rho));
            r2 = r2.max(r2_of_state(&total, &rho));
        }
        levels.push(LevelMetric {
            energy,
            multiplicity: basis.ncols(),
            r1,
            r2,
            exact,
        });
    }
    Ok(MetricReport {
        r1: levels.iter().map(|l| l.r1).fold(0.0, f64::max),
        r2: levels.iter().map(|l| l.r2).sum(),
        levels,
        lambda_samples,
    })
}

pub fn r1<R: Rng + ?Sized>(
    instr: &MeasurementInstrument,
    h: &Hamiltonian,
    lambda_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    Ok(evaluate(instr, h, lambda_samples, rng)?.r1)
}

pub fn r2<R: Rng + ?Sized>(
    instr: &MeasurementInstrument,
    h: &Hamiltonian,
    lambda_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    Ok(evaluate(instr, h, lambda_samples, rng)?.r2)
}

/// `H - (m phi_{U(t/m)} / t) I`.
pub fn shifted_hamiltonian(h: &Hamiltonian, t: f64, m: u64) -> Result<Hamiltonian> {
    let phi = phase_factor(&h.evolve(t / m as f64))?;
    Ok(h.shifted(m as f64 * phi / t))
}

/// `eps + 16 pi^2 / (2^N eps t^4)`.
pub fn r1_bound_ideal(epsilon: f64, t: f64, n: u32) -> f64 {
    epsilon + 16.0 * PI * PI / (2f64.powi(n as i32) * epsilon * t.powi(4))
}

/// The `epsilon` minimising [`r1_bound_ideal`]: `4 pi / (t^2 2^{N/2})`.
pub fn optimal_epsilon(t: f64, n: u32) -> f64 {
    4.0 * PI / (t * t * 2f64.powf(n as f64 / 2.0))
}

/// `ideal_r1 + 2^N (2 delta) 4 pi^2 / t^2`.
pub fn r1_pea_bound(ideal_r1: f64, delta: f64, t: f64, n: u32) -> f64 {
    ideal_r1 + 2f64.powi(n as i32) * 2.0 * delta * 4.0 * PI * PI / (t * t)
}

/// Ledger of one phase-estimation run with `m` slices per unit of `t`.
///
/// `total_evolution_time` is `(2^{N+1} - 1) t` for every `m`. The per-rung
/// calls are those of the simulated ladder (`m 2^k` slices of `t/m` at rung
/// `k < N`), whose sum is `(2^N - 1) t`.
pub fn runtime_ledger(n: u32, t: f64, m: u64) -> ResourceLedger {
    let slice = t / m as f64;
    ResourceLedger {
        total_evolution_time: (2f64.powi(n as i32 + 1) - 1.0) * t,
        gate_calls: (0..n).map(|k| m << k).collect(),
        call_durations: vec![slice; n as usize],
    }
}

/// Parameters chosen for a target spread and accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingPlan {
    pub delta_max: f64,
    pub epsilon: f64,
    /// `pi / (2 Delta)`.
    pub t: f64,
    /// `16 pi^2 / (eps^2 t^4)` before rounding.
    pub nominal_register: f64,
    /// `ceil(log2(nominal_register))`, at least 1.
    pub qubits: u32,
    /// `eps t^2 / (8 pi^2 2^N)`, making the chained R1 penalty equal `eps`.
    pub delta: f64,
    pub m: u64,
    /// `(2^{N+1} - 1) t` with the rounded `N`.
    pub total_time: f64,
    /// `(2 nominal_register - 1) t`.
    pub nominal_total_time: f64,
}

/// Chooses `(t, N, delta, m)` for a spread `delta_max` and accuracy `epsilon`.
pub fn sizing_recipe(delta_max: f64, epsilon: f64) -> Result<SizingPlan> {
    if !(delta_max > 0.0 && epsilon > 0.0) {
        return Err(crate::error::Error::InvalidArgument(format!(
            "need positive spread and epsilon, got {delta_max}, {epsilon}"
        )));
    }
    let t = PI / (2.0 * delta_max);
    let nominal_register = 16.0 * PI * PI / (epsilon * epsilon * t.powi(4));
    let qubits = (nominal_register.log2().ceil().max(1.0)) as u32;
    let register = 2f64.powi(qubits as i32);
    let delta = (epsilon * t * t / (8.0 * PI * PI * register)).min(0.5);
    let m = min_iterations(delta_max, t, qubits, delta)?;
    Ok(SizingPlan {
        delta_max,
        epsilon,
        t,
        nominal_register,
        qubits,
        delta,
        m,
        total_time: runtime_ledger(qubits, t, m).total_evolution_time,
        nominal_total_time: (2.0 * nominal_register - 1.0) * t,
    })
}

/// CSV summary row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummaryRow {
    pub config_hash: String,
    pub r1: f64,
    pub r1_bound: f64,
    pub r2: f64,
    pub t_pe: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::QuantumChannel;
    use crate::linalg::{identity, random_hamiltonian, DensityMatrix};
    use crate::pea::{eigenphase, p_n, pea_instrument, Dyadic, PeaConfig, PeaMode, energy_from_outcome};
    use crate::rng::seeded;

    fn ideal_instrument(h: &Hamiltonian, n: u32, t: f64) -> MeasurementInstrument {
        let cfg = PeaConfig::new(n, h.clone(), t, PeaMode::Ideal, DensityMatrix::maximally_mixed(h.dim()));
        pea_instrument(&cfg).unwrap()
    }

    #[test]
    fn projective_instrument_is_perfect() {
        let mut rng = seeded(81);
        let h = random_hamiltonian(4, 2.0, &mut rng);
        let rep = evaluate(&MeasurementInstrument::projective(&h), &h, 16, &mut rng).unwrap();
        assert!(rep.r1 < 1e-12 && rep.r2 < 1e-12);
        let degenerate = Hamiltonian::from_diagonal(&[0.0, 0.0, 1.0]);
        let rep = evaluate(&MeasurementInstrument::projective(&degenerate), &degenerate, 16, &mut rng).unwrap();
        assert!(rep.r1 < 1e-12 && rep.r2 < 1e-12);
        assert!(rep.levels.iter().all(|l| l.exact));
    }

    #[test]
    fn dyadic_pea_has_zero_r1() {
        let h = Hamiltonian::from_diagonal(&[-PI / 2.0, 0.0, PI / 4.0]);
        let instr = ideal_instrument(&h, 3, 1.0);
        let rep = evaluate(&instr, &h, 8, &mut seeded(1)).unwrap();
        assert!(rep.r1 < 1e-12);
        assert!(rep.r2 < 1e-9);
    }

    #[test]
    fn r1_matches_outcome_sum() {
        let h = Hamiltonian::from_diagonal(&[-0.37, 0.52]);
        let t = 1.0;
        let n = 3;
        let instr = ideal_instrument(&h, n, t);
        let rep = evaluate(&instr, &h, 8, &mut seeded(2)).unwrap();
        let brute = h
            .energies()
            .iter()
            .map(|&e| {
                Dyadic::all(n)
                    .map(|f| p_n(f, eigenphase(e, t)) * (e - energy_from_outcome(f, t)).powi(2))
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        assert!((rep.r1 - brute).abs() < 1e-10);
    }

    #[test]
    fn r2_examples() {
        let mut rng = seeded(82);
        let d = 3;
        let h = random_hamiltonian(d, 1.0, &mut rng);
        let replace = QuantumChannel::from_linear_map(d, d, |x| identity(d) * (trace(x) / C64::new(d as f64, 0.0)));
        let instr = MeasurementInstrument::new(vec![0.0], vec![replace]).unwrap();
        let r2v = r2(&instr, &h, 8, &mut rng).unwrap();
        assert!((r2v - 3.0 * (2.0 - 2.0 / d as f64)).abs() < 1e-10);
        let trivial = MeasurementInstrument::trivial(d, 0.0);
        assert!(r2(&trivial, &h, 8, &mut rng).unwrap() < 1e-14);
        for mode in [PeaMode::Ideal, PeaMode::Controllized { m: 3 }] {
            let cfg = PeaConfig::new(3, h.clone(), 0.8, mode, DensityMatrix::maximally_mixed(d));
            let instr = pea_instrument(&cfg).unwrap();
            assert!(r2(&instr, &h, 8, &mut rng).unwrap() < 1e-9);
        }
    }

    #[test]
    fn sampling_is_used_for_non_commuting_maps() {
        let mut rng = seeded(83);
        let h = Hamiltonian::from_diagonal(&[0.0, 0.0]);
        let x = ComplexMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let flip = QuantumChannel::conjugation(&x);
        let instr = MeasurementInstrument::new(vec![0.0], vec![flip]).unwrap();
        let rep = evaluate(&instr, &h, 64, &mut rng).unwrap();
        assert!(!rep.levels[0].exact);
        // Basis states are flipped: trace norm 2.
        assert!((rep.r2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_examples() {
        let sym = Hamiltonian::from_diagonal(&[-0.5, 0.5]);
        let s = shifted_hamiltonian(&sym, 1.0, 4).unwrap();
        assert!(max_abs_diff(s.matrix(), sym.matrix()) < 1e-15);
        let flat = Hamiltonian::from_diagonal(&[0.7, 0.7]);
        for m in [1, 5, 50] {
            let s = shifted_hamiltonian(&flat, 1.0, m).unwrap();
            assert!(max_abs(s.matrix()) < 1e-12);
        }
        let mut rng = seeded(84);
        let h = random_hamiltonian(3, 1.0, &mut rng);
        let s = shifted_hamiltonian(&h, 1.0, 7).unwrap();
        for (p, q) in h.projectors().iter().zip(s.projectors()) {
            assert!(max_abs_diff(p, q) < 1e-12);
        }
    }

    #[test]
    fn bound_arithmetic() {
        assert!((r1_bound_ideal(1.0, 1.0, 10) - (1.0 + 16.0 * PI * PI / 1024.0)).abs() < 1e-12);
        assert!((r1_bound_ideal(1.0, 1.0, 10) - 1.1542).abs() < 1e-4);
        for n in 2..10 {
            let t = 0.9;
            let e = optimal_epsilon(t, n);
            let b = r1_bound_ideal(e, t, n);
            assert!(b <= r1_bound_ideal(e * 1.01, t, n) && b <= r1_bound_ideal(e * 0.99, t, n));
        }
        assert_eq!(r1_pea_bound(0.3, 0.0, 1.0, 4), 0.3);
        assert!((r1_pea_bound(0.0, 0.1, 1.0, 3) - 63.165).abs() < 1e-3);
    }

    #[test]
    fn ideal_r1_within_bound() {
        let h = Hamiltonian::from_diagonal(&[-0.41, 0.33]);
        let t = 1.0;
        for n in 2..=6 {
            let instr = ideal_instrument(&h, n, t);
            let r = r1(&instr, &h, 8, &mut seeded(3)).unwrap();
            for eps in [0.1, 0.5, 1.0] {
                assert!(r <= r1_bound_ideal(eps, t, n));
            }
        }
    }

    #[test]
    fn ledger_examples() {
        let l = runtime_ledger(3, 0.1, 1);
        assert!((l.total_evolution_time - 1.5).abs() < 1e-15);
        assert_eq!(runtime_ledger(3, 0.1, 1).total_evolution_time, runtime_ledger(3, 0.1, 100).total_evolution_time);
        assert!((runtime_ledger(3, 0.1, 100).consumed_time() - 0.7).abs() < 1e-12);
        let a = sizing_recipe(1.0, 0.2).unwrap();
        let b = sizing_recipe(1.0, 0.1).unwrap();
        assert_eq!(b.qubits, a.qubits + 2);
        assert!((b.nominal_register / a.nominal_register - 4.0).abs() < 1e-12);
        assert!((b.nominal_total_time / a.nominal_total_time - 4.0).abs() < 0.01);
    }
}
