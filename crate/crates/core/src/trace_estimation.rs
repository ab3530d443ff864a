//! One-clean-qubit estimation of the coherence factor and the search for a
//! spectral-diameter bound built on it.
//!
//! Two circuits are provided. The reference circuit uses an ideal
//! controlled-`U` on a maximally mixed target and reads `<sigma_z> =
//! Re Tr U / d` (or `Im Tr U / d` with a phase gate before the final
//! Hadamard). The black-box circuit replaces controlled-`U` by the
//! pseudo-controlled gate with a maximally mixed ancilla; its control
//! polarisation is `<sigma_z> = |Tr U|^2 / d^2`, phase free, so it needs only
//! "evolve for `tau`" access to the Hamiltonian.

use std::cell::RefCell;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::controllization::{controlled_unitary_matrix, pseudo_control_gate};
use crate::cue::{full_time_bound, half_time_bound};
use crate::error::{Error, Result};
use crate::linalg::{
    coherence_factor, identity, kron, kron_all, partial_trace_matrix, ComplexMatrix,
    DensityMatrix, Hamiltonian, Unitary, C64, ONE,
};
use crate::metrics::ResourceLedger;

/// Black-box access to `U(tau) = exp(-i H tau)`.
pub trait EvolutionOracle {
    fn dim(&self) -> usize;
    fn evolve(&self, tau: f64) -> Unitary;
}

impl EvolutionOracle for Hamiltonian {
    fn dim(&self) -> usize {
        Hamiltonian::dim(self)
    }

    fn evolve(&self, tau: f64) -> Unitary {
        Hamiltonian::evolve(self, tau)
    }
}

/// Wraps an oracle and records every requested duration.
#[derive(Debug)]
pub struct RecordingOracle<O> {
    inner: O,
    calls: RefCell<Vec<f64>>,
}

impl<O: EvolutionOracle> RecordingOracle<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            calls: RefCell::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<f64> {
        self.calls.borrow().clone()
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: EvolutionOracle> EvolutionOracle for RecordingOracle<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn evolve(&self, tau: f64) -> Unitary {
        self.calls.borrow_mut().push(tau);
        self.inner.evolve(tau)
    }
}

fn hadamard() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_row_slice(2, 2, &[ONE * s, ONE * s, ONE * s, -ONE * s])
}

/// Reference circuit: `|0>`, Hadamard, controlled-`U` on `I/d`,
/// `diag(1, e^{-i alpha})`, Hadamard; reduced control state.
/// `<sigma_z> = Re(e^{-i alpha} Tr U) / d`.
pub fn dqc1_state_with_phase(u: &Unitary, alpha: f64) -> DensityMatrix {
    let d = u.dim();
    let h = hadamard();
    let p = ComplexMatrix::from_row_slice(2, 2, &[ONE, C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::from_polar(1.0, -alpha)]);
    let cu = controlled_unitary_matrix(u.matrix(), ONE);
    let mut rho = kron(&crate::linalg::matrix_unit(2, 0, 0), &identity(d).unscale(d as f64));
    let first = kron(&h, &identity(d));
    let last = kron(&(&h * &p), &identity(d));
    rho = &first * rho * first.adjoint();
    rho = &cu * rho * cu.adjoint();
    rho = &last * rho * last.adjoint();
    let reduced = partial_trace_matrix(&rho, &[2, d], &[0]).expect("dims are consistent");
    DensityMatrix::new_unchecked(reduced, vec![2]).expect("2x2")
}

/// Reference circuit with no phase gate: `<sigma_z> = Re Tr U / d`.
pub fn dqc1_state(u: &Unitary) -> DensityMatrix {
    dqc1_state_with_phase(u, 0.0)
}

/// Black-box circuit, simulated in full on control (x) ancilla (x) target.
pub fn pseudo_dqc1_state(u: &Unitary) -> DensityMatrix {
    let d = u.dim();
    let h = hadamard();
    let w = pseudo_control_gate(u);
    let mixed = identity(d).unscale(d as f64);
    let mut rho = kron_all(&[&crate::linalg::matrix_unit(2, 0, 0), &mixed, &mixed]);
    let hh = kron(&h, &identity(d * d));
    rho = &hh * rho * hh.adjoint();
    rho = w.matrix() * rho * w.matrix().adjoint();
    rho = &hh * rho * hh.adjoint();
    let reduced = partial_trace_matrix(&rho, &[2, d, d], &[0]).expect("dims are consistent");
    DensityMatrix::new_unchecked(reduced, vec![2]).expect("2x2")
}

/// `<sigma_z>` of the black-box circuit without building it: `a_U^2`.
pub fn pseudo_dqc1_polarization(u: &Unitary) -> f64 {
    coherence_factor(u).powi(2)
}

/// `Tr(rho sigma_z)` for a qubit state.
pub fn sigma_z_expectation(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    (m[(0, 0)] - m[(1, 1)]).re
}

/// Monte-Carlo estimate of `a_{U(tau)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceEstimate {
    /// Mean of the `+-1` readouts, an unbiased estimate of `a^2`.
    pub raw_mean: f64,
    /// `sqrt(max(raw_mean, 0))`.
    pub a_hat: f64,
    pub shots: u64,
    /// `sqrt((1 - raw_mean^2) / M)`.
    pub stderr: f64,
    pub tau: f64,
    pub exact_a: Option<f64>,
}

/// Runs the black-box circuit `shots` times with `U(tau)` from `oracle`.
pub fn estimate_coherence<O: EvolutionOracle + ?Sized, R: Rng + ?Sized>(
    oracle: &O,
    tau: f64,
    shots: u64,
    rng: &mut R,
) -> Result<CoherenceEstimate> {
    if shots == 0 {
        return Err(Error::InvalidArgument("need at least one shot".into()));
    }
    let u = oracle.evolve(tau);
    let polarization = pseudo_dqc1_polarization(&u).clamp(0.0, 1.0);
    let p_plus = 0.5 * (1.0 + polarization);
    let plus = Binomial::new(shots, p_plus)
        .map_err(|e| Error::Numerical(format!("binomial: {e}")))?
        .sample(rng);
    let raw_mean = (2.0 * plus as f64 - shots as f64) / shots as f64;
    Ok(CoherenceEstimate {
        raw_mean,
        a_hat: raw_mean.max(0.0).sqrt(),
        shots,
        stderr: ((1.0 - raw_mean * raw_mean).max(0.0) / shots as f64).sqrt(),
        tau,
        exact_a: None,
    })
}

/// Same as [`estimate_coherence`], attaching the exact value from a known
/// Hamiltonian.
pub fn estimate_coherence_known<R: Rng + ?Sized>(
    h: &Hamiltonian,
    tau: f64,
    shots: u64,
    rng: &mut R,
) -> Result<CoherenceEstimate> {
    let mut est = estimate_coherence(h, tau, shots, rng)?;
    est.exact_a = Some(coherence_factor(&h.evolve(tau)));
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub shots: u64,
    pub threshold: f64,
    pub k_max: u32,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            shots: 10_000,
            threshold: 0.5,
            k_max: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchStep {
    pub k: u32,
    pub tau: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub shots: u64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaMaxResult {
    pub k_prime: u32,
    /// `2^{k'+2} pi / t0`.
    pub bound: f64,
    pub history: Vec<SearchStep>,
    pub threshold: f64,
    pub ledger: ResourceLedger,
}

/// For `k = 2, 3, ...` estimates `a_{U(t0/2^k)}^2` and stops at the first
/// `k'` whose estimate exceeds `threshold` by three standard errors.
pub fn delta_max_search<O: EvolutionOracle + ?Sized, R: Rng + ?Sized>(
    oracle: &O,
    t0: f64,
    opts: SearchOptions,
    rng: &mut R,
) -> Result<DeltaMaxResult> {
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::InvalidArgument(format!("t0 must be positive, got {t0}")));
    }
    let mut history = Vec::new();
    let mut ledger = ResourceLedger::empty();
    for k in 2..=opts.k_max {
        let tau = t0 / 2f64.powi(k as i32);
        let est = estimate_coherence(oracle, tau, opts.shots, rng)?;
        ledger.record(opts.shots, tau);
        let passed = est.raw_mean - 3.0 * est.stderr > opts.threshold;
        history.push(SearchStep {
            k,
            tau,
            estimate: est.raw_mean,
            stderr: est.stderr,
            shots: opts.shots,
            passed,
        });
        if passed {
            return Ok(DeltaMaxResult {
                k_prime: k,
                bound: 2f64.powi(k as i32 + 2) * std::f64::consts::PI / t0,
                history,
                threshold: opts.threshold,
                ledger,
            });
        }
    }
    Err(Error::SearchExhausted { k_max: opts.k_max })
}

/// The two failure-probability bounds at `d`, and the second one at `2^6`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessBounds {
    pub d: usize,
    pub full_time: f64,
    pub half_time: f64,
    pub half_time_six_qubits: f64,
}

pub fn success_probability_bounds(d: usize) -> Result<SuccessBounds> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("need d >= 2, got {d}")));
    }
    Ok(SuccessBounds {
        d,
        full_time: full_time_bound(d as f64),
        half_time: half_time_bound(d as f64),
        half_time_six_qubits: half_time_bound(64.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_unitary, random_hamiltonian, trace};
    use crate::rng::seeded;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn reference_circuit_reads_real_and_imaginary_parts() {
        assert!((sigma_z_expectation(&dqc1_state(&Unitary::identity(3))) - 1.0).abs() < 1e-12);
        let z = Unitary::diagonal(&[ONE, -ONE]).unwrap();
        assert!(sigma_z_expectation(&dqc1_state(&z)).abs() < 1e-12);
        let mut rng = seeded(91);
        for _ in 0..10 {
            let u = haar_unitary(3, &mut rng);
            let tr = trace(u.matrix()) / C64::new(3.0, 0.0);
            assert!((sigma_z_expectation(&dqc1_state(&u)) - tr.re).abs() < 1e-10);
            let y = dqc1_state_with_phase(&u, FRAC_PI_2);
            assert!((sigma_z_expectation(&y) - tr.im).abs() < 1e-10);
        }
    }

    #[test]
    fn black_box_circuit_reads_squared_coherence() {
        let mut rng = seeded(92);
        for d in 2..=3 {
            let u = haar_unitary(d, &mut rng);
            let rho = pseudo_dqc1_state(&u);
            assert!((sigma_z_expectation(&rho) - coherence_factor(&u).powi(2)).abs() < 1e-10);
            assert!(rho.matrix()[(0, 1)].norm() < 1e-12);
        }
    }

    #[test]
    fn identity_gives_exact_estimate() {
        let h = Hamiltonian::from_diagonal(&[0.4, 0.4]);
        let est = estimate_coherence(&h, 0.7, 123, &mut seeded(1)).unwrap();
        assert_eq!(est.a_hat, 1.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn stderr_scaling() {
        let h = Hamiltonian::from_diagonal(&[0.0, 1.0]);
        let mut rng = seeded(93);
        let reps = 200;
        let s1: f64 = (0..reps)
            .map(|_| estimate_coherence(&h, FRAC_PI_2, 2_500, &mut rng).unwrap().stderr)
            .sum();
        let s4: f64 = (0..reps)
            .map(|_| estimate_coherence(&h, FRAC_PI_2, 10_000, &mut rng).unwrap().stderr)
            .sum();
        let ratio = s4 / s1;
        assert!((0.45..=0.55).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn raw_mean_is_unbiased() {
        let h = Hamiltonian::from_diagonal(&[0.0, 1.0]);
        let a2 = coherence_factor(&h.evolve(FRAC_PI_2)).powi(2);
        let mut rng = seeded(94);
        let m = 1_000;
        let reps = 1_000;
        let vals: Vec<f64> = (0..reps)
            .map(|_| estimate_coherence(&h, FRAC_PI_2, m, &mut rng).unwrap().raw_mean)
            .collect();
        let mean = vals.iter().sum::<f64>() / reps as f64;
        let sd = ((1.0 - a2 * a2) / m as f64).sqrt();
        assert!((mean - a2).abs() <= 1.0 / m as f64 + 3.0 * sd / (reps as f64).sqrt());
    }

    #[test]
    fn oracle_calls_are_recorded() {
        let h = Hamiltonian::from_diagonal(&[0.0, 1.0]);
        let rec = RecordingOracle::new(h);
        let res = delta_max_search(&rec, 1.0, SearchOptions::default(), &mut seeded(3)).unwrap();
        assert_eq!(res.k_prime, 2);
        assert_eq!(rec.calls(), vec![0.25]);
        assert!((res.ledger.total_evolution_time - 10_000.0 * 0.25).abs() < 1e-9);
        // a_{U(1/4)}^2 = cos^2(1/8).
        assert!((res.history[0].estimate - (0.125f64).cos().powi(2)).abs() < 0.01);
    }

    #[test]
    fn zero_hamiltonian_stops_at_two() {
        let h = Hamiltonian::from_diagonal(&[0.0, 0.0, 0.0]);
        let res = delta_max_search(&h, 2.0, SearchOptions::default(), &mut seeded(4)).unwrap();
        assert_eq!(res.k_prime, 2);
        assert!((res.bound - 8.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn search_bounds_spread() {
        let mut rng = seeded(95);
        let mut ok = 0;
        for _ in 0..20 {
            let h = random_hamiltonian(8, 1.0, &mut rng);
            let t0 = rng.random_range(8.0 * PI..32.0 * PI);
            let res = delta_max_search(&h, t0, SearchOptions::default(), &mut rng).unwrap();
            if res.bound > h.delta_max() {
                ok += 1;
            }
            let consumed: f64 = res.history.iter().map(|s| s.shots as f64 * s.tau).sum();
            assert!((res.ledger.total_evolution_time - consumed).abs() < 1e-9);
        }
        assert!(ok >= 19);
    }

    #[test]
    fn exhausted_search() {
        let h = Hamiltonian::from_diagonal(&[0.0, 1.0]);
        let opts = SearchOptions {
            threshold: 1.5,
            k_max: 5,
            ..SearchOptions::default()
        };
        assert!(matches!(
            delta_max_search(&h, 1.0, opts, &mut seeded(5)),
            Err(Error::SearchExhausted { k_max: 5 })
        ));
    }

    #[test]
    fn success_bounds_values() {
        let b = success_probability_bounds(4).unwrap();
        assert!((b.full_time - 0.687).abs() < 1e-3);
        assert!(b.half_time_six_qubits < 0.02);
        let b6 = success_probability_bounds(6).unwrap();
        assert!(b6.half_time > 0.02);
        let mut prev = success_probability_bounds(4).unwrap();
        for d in 5..=64 {
            let cur = success_probability_bounds(d).unwrap();
            assert!(cur.full_time < prev.full_time && cur.half_time < prev.half_time);
            prev = cur;
        }
    }
}
