//! Phase estimation with ideal or controllized controlled-unitaries.
//!
//! Control register: `N` qubits, integer `c` with bit `k` driving the rung
//! that applies `U^{2^k}`. Readout `n` is the numerator of `f_N = n / 2^N`.
//! An eigenvector with `U(t)|theta> = e^{i theta}|theta>` produces outcome
//! `n` with amplitude `2^{-N} sum_c e^{i c (theta - 2 pi f_N)}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{
    coherence_factor, matrix_unit, trace, ComplexMatrix, ComplexVector, DensityMatrix,
    Hamiltonian, C64, ONE, ZERO,
};

/// Default limit on `2^N * d` for circuit simulation.
pub const DEFAULT_DIM_BUDGET: usize = 1 << 12;

/// `numerator / 2^bits`, `0 <= numerator < 2^bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dyadic {
    numerator: u64,
    bits: u32,
}

impl Dyadic {
    pub fn new(numerator: u64, bits: u32) -> Result<Self> {
        if bits == 0 || bits > 62 {
            return Err(Error::InvalidArgument(format!("bits must be in 1..=62, got {bits}")));
        }
        if numerator >= 1u64 << bits {
            return Err(Error::InvalidArgument(format!(
                "numerator {numerator} does not fit in {bits} bits"
            )));
        }
        Ok(Self { numerator, bits })
    }

    pub fn numerator(&self) -> u64 {
        self.numerator
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn denominator(&self) -> u64 {
        1u64 << self.bits
    }

    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator() as f64
    }

    /// All `2^bits` fractions in increasing order.
    pub fn all(bits: u32) -> impl Iterator<Item = Dyadic> {
        (0..1u64 << bits).map(move |numerator| Dyadic { numerator, bits })
    }
}

/// Eigenphase of `U(t)` for energy `E`, in `[0, 2 pi)`.
pub fn eigenphase(energy: f64, t: f64) -> f64 {
    let theta = (-energy * t).rem_euclid(2.0 * PI);
    if theta >= 2.0 * PI {
        0.0
    } else {
        theta
    }
}

fn wrap_pi(y: f64) -> f64 {
    let w = (y + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Outcome amplitude `2^{-N} sum_{c < 2^N} e^{i c y}`, `y = theta - 2 pi f_N`,
/// as `A(y) e^{i (2^N - 1) y / 2}` with `A` the signed sine ratio.
pub fn outcome_amplitude(f: Dyadic, theta: f64) -> C64 {
    let k = f.denominator() as f64;
    let y = wrap_pi(theta - 2.0 * PI * f.value());
    let s = (y / 2.0).sin();
    let ratio = if s.abs() < 1e-12 {
        1.0
    } else {
        (k * y / 2.0).sin() / (k * s)
    };
    C64::from_polar(ratio, (k - 1.0) * y / 2.0)
}

/// `P_N(2 pi f_N | theta) = sin^2(2^{N-1} y) / (2^{2N} sin^2(y/2))`.
pub fn p_n(f: Dyadic, theta: f64) -> f64 {
    outcome_amplitude(f, theta).norm_sqr()
}

/// `prod_{k=1}^N (1/2)[1 + a^{m 2^{k-1}} cos(2^{k-1}(theta + m phi - 2 pi f_N))]`.
pub fn q_n(f: Dyadic, theta: f64, a: f64, phi: f64, m: u64) -> f64 {
    let y = theta + m as f64 * phi - 2.0 * PI * f.value();
    let mut prod = 1.0;
    let mut coh = a.powf(m as f64);
    let mut scale = 1.0;
    for _ in 0..f.bits() {
        prod *= 0.5 * (1.0 + coh * (scale * y).cos());
        coh *= coh;
        scale *= 2.0;
    }
    prod
}

/// Smallest `m >= 1` with `m >= Delta^2 t^2 N 2^N / (4 delta)`.
pub fn min_iterations(delta_max: f64, t: f64, n: u32, delta: f64) -> Result<u64> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidArgument(format!("delta must be in (0, 1/2], got {delta}")));
    }
    let raw = delta_max * delta_max * t * t * n as f64 * 2f64.powi(n as i32) / (4.0 * delta);
    if !raw.is_finite() || raw > u64::MAX as f64 {
        return Err(Error::Numerical(format!("iteration count {raw} overflows")));
    }
    let m = (raw * (1.0 - 1e-12)).ceil();
    Ok((m as u64).max(1))
}

/// `-2 pi f / t` on `[0, 1/2)`, `-(2 pi f - 2 pi) / t` on `[1/2, 1)`.
pub fn energy_from_outcome(f: Dyadic, t: f64) -> f64 {
    let x = f.value();
    if x == 0.0 {
        0.0
    } else if x < 0.5 {
        -2.0 * PI * x / t
    } else {
        -(2.0 * PI * x - 2.0 * PI) / t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeaMode {
    Ideal,
    /// Every rung is replaced by `Gamma_{U(t/m)}^{m 2^k}`.
    Controllized { m: u64 },
}

#[derive(Debug, Clone)]
pub struct PeaConfig {
    pub qubits: u32,
    pub hamiltonian: Hamiltonian,
    pub time: f64,
    pub mode: PeaMode,
    pub input: DensityMatrix,
    /// Limit on `2^N * d`.
    pub dim_budget: usize,
}

impl PeaConfig {
    pub fn new(qubits: u32, hamiltonian: Hamiltonian, time: f64, mode: PeaMode, input: DensityMatrix) -> Self {
        Self {
            qubits,
            hamiltonian,
            time,
            mode,
            input,
            dim_budget: DEFAULT_DIM_BUDGET,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.qubits == 0 || self.qubits > 30 {
            return Err(Error::InvalidArgument(format!("qubits must be in 1..=30, got {}", self.qubits)));
        }
        if !(self.time > 0.0 && self.time.is_finite()) {
            return Err(Error::InvalidArgument(format!("time must be positive, got {}", self.time)));
        }
        if let PeaMode::Controllized { m } = self.mode {
            if m == 0 {
                return Err(Error::InvalidArgument("m must be at least 1".into()));
            }
        }
        if self.input.dim() != self.hamiltonian.dim() {
            return Err(Error::DimMismatch(format!(
                "input state has dimension {}, Hamiltonian {}",
                self.input.dim(),
                self.hamiltonian.dim()
            )));
        }
        let required = (1usize << self.qubits).saturating_mul(self.hamiltonian.dim());
        if required > self.dim_budget {
            return Err(Error::BudgetExceeded {
                required,
                budget: self.dim_budget,
            });
        }
        Ok(())
    }
}

/// Outcome probabilities indexed by numerator, with decoded energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub bits: u32,
    pub probs: Vec<f64>,
    pub energies: Vec<f64>,
}

/// One exported row: numerator, `f_N`, probability, decoded energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub n: u64,
    pub f: f64,
    pub prob: f64,
    pub energy: f64,
}

impl OutcomeDistribution {
    pub fn new(bits: u32, probs: Vec<f64>, t: f64) -> Result<Self> {
        if probs.len() != 1usize << bits {
            return Err(Error::DimMismatch(format!(
                "{} probabilities for {bits} bits",
                probs.len()
            )));
        }
        let energies = Dyadic::all(bits).map(|f| energy_from_outcome(f, t)).collect();
        Ok(Self {
            bits,
            probs,
            energies,
        })
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn rows(&self) -> Vec<OutcomeRow> {
        Dyadic::all(self.bits)
            .zip(self.probs.iter().zip(&self.energies))
            .map(|(f, (&prob, &energy))| OutcomeRow {
                n: f.numerator(),
                f: f.value(),
                prob,
                energy,
            })
            .collect()
    }

    /// `max_n |self(n) - other(n)|`.
    pub fn max_deviation(&self, other: &[f64]) -> f64 {
        self.probs
            .iter()
            .zip(other)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }
}

/// Outcome values paired with CP maps whose sum is trace preserving.
#[derive(Debug, Clone)]
pub struct MeasurementInstrument {
    outcomes: Vec<f64>,
    maps: Vec<QuantumChannel>,
}

impl MeasurementInstrument {
    pub fn new(outcomes: Vec<f64>, maps: Vec<QuantumChannel>) -> Result<Self> {
        if outcomes.len() != maps.len() || maps.is_empty() {
            return Err(Error::DimMismatch(format!(
                "{} outcomes for {} maps",
                outcomes.len(),
                maps.len()
            )));
        }
        let d = maps[0].input_dim();
        if maps.iter().any(|m| m.input_dim() != d || m.output_dim() != d) {
            return Err(Error::DimMismatch("instrument maps differ in dimension".into()));
        }
        Ok(Self { outcomes, maps })
    }

    /// The projective measurement `{(E_k, P_k . P_k)}` of `h`.
    pub fn projective(h: &Hamiltonian) -> Self {
        let maps = h.projectors().iter().map(QuantumChannel::conjugation).collect();
        Self {
            outcomes: h.energies().to_vec(),
            maps,
        }
    }

    /// One outcome, the identity map.
    pub fn trivial(d: usize, outcome: f64) -> Self {
        Self {
            outcomes: vec![outcome],
            maps: vec![QuantumChannel::identity(d)],
        }
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn maps(&self) -> &[QuantumChannel] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.maps[0].input_dim()
    }

    /// `sum_j I_j`.
    pub fn total_map(&self) -> QuantumChannel {
        let d = self.dim();
        self.maps
            .iter()
            .fold(QuantumChannel::zero(d, d), |acc, m| acc.add(m))
    }

    pub fn completeness_defect(&self) -> f64 {
        self.total_map().trace_preservation_defect()
    }

    pub fn min_choi_eigenvalue(&self) -> f64 {
        self.maps
            .iter()
            .map(QuantumChannel::choi_min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }

    /// `Tr I_j(rho)` for every outcome.
    pub fn probabilities(&self, rho: &ComplexMatrix) -> Vec<f64> {
        self.maps.iter().map(|m| trace(&m.apply(rho)).re).collect()
    }

    /// `I_j(rho) / Tr I_j(rho)`.
    pub fn conditional_state(&self, j: usize, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let out = self.maps[j].apply(rho);
        let p = trace(&out).re;
        if p < 1e-14 {
            return Err(Error::ZeroProbabilityBranch(p));
        }
        Ok(out.unscale(p))
    }
}

/// Per-rung data: `V_k = U(2^k t)` and the `|1><0|` scalar `gamma_k`.
fn ladder(cfg: &PeaConfig) -> Result<Vec<(ComplexMatrix, C64)>> {
    let h = &cfg.hamiltonian;
    let d = h.dim() as f64;
    let base = match cfg.mode {
        PeaMode::Ideal => None,
        PeaMode::Controllized { m } => {
            let slice = h.evolve(cfg.time / m as f64);
            Some(((slice.trace() / C64::new(d, 0.0)).conj(), m))
        }
    };
    (0..cfg.qubits)
        .map(|k| {
            let reps = 1u64 << k;
            let v = h.evolve(cfg.time * reps as f64).matrix().clone();
            let gamma = match base {
                None => ONE,
                Some((g, m)) => {
                    let e = m.checked_mul(reps).ok_or_else(|| {
                        Error::Numerical("rung exponent overflows".into())
                    })?;
                    match u32::try_from(e) {
                        Ok(e32) => g.powu(e32),
                        Err(_) => C64::from_polar(g.norm().powf(e as f64), g.arg() * e as f64),
                    }
                }
            };
            Ok((v, gamma))
        })
        .collect()
}

/// Runs the circuit on target operator `x`; returns the post-QFT diagonal
/// control blocks, i.e. `I_n(x)` for every `n`.
fn simulate_blocks(x: &ComplexMatrix, qubits: u32, rungs: &[(ComplexMatrix, C64)]) -> Vec<ComplexMatrix> {
    let k = 1usize << qubits;
    let d = x.nrows();
    // Hadamards on |0...0>: every control block equals x / 2^N.
    let init = x.unscale(k as f64);
    let mut blocks: Vec<ComplexMatrix> = vec![init; k * k];
    for (bit, (v, gamma)) in rungs.iter().enumerate() {
        let v_dag = v.adjoint();
        for c in 0..k {
            let b = (c >> bit) & 1;
            for cp in 0..k {
                let bp = (cp >> bit) & 1;
                let blk = &mut blocks[c * k + cp];
                match (b, bp) {
                    (0, 0) => {}
                    (1, 1) => *blk = v * &*blk * &v_dag,
                    (1, 0) => *blk = (v * &*blk) * *gamma,
                    _ => *blk = (&*blk * &v_dag) * gamma.conj(),
                }
            }
        }
    }
    // Inverse QFT, then keep the diagonal (n, n) blocks.
    let norm = 1.0 / k as f64;
    (0..k)
        .map(|n| {
            let phases: Vec<C64> = (0..k)
                .map(|c| C64::from_polar(1.0, -2.0 * PI * ((n * c) % k) as f64 / k as f64))
                .collect();
            let mut out = ComplexMatrix::from_element(d, d, ZERO);
            for c in 0..k {
                for cp in 0..k {
                    let w = phases[c] * phases[cp].conj() * norm;
                    out += &blocks[c * k + cp] * w;
                }
            }
            out
        })
        .collect()
}

/// Full circuit simulation: outcome distribution for the configured input
/// and the instrument on the target.
pub fn run_pea(cfg: &PeaConfig) -> Result<(OutcomeDistribution, MeasurementInstrument)> {
    cfg.validate()?;
    let instrument = pea_instrument(cfg)?;
    let probs = instrument.probabilities(cfg.input.matrix());
    let dist = OutcomeDistribution::new(cfg.qubits, probs, cfg.time)?;
    Ok((dist, instrument))
}

/// The instrument alone; `cfg.input` is not used.
pub fn pea_instrument(cfg: &PeaConfig) -> Result<MeasurementInstrument> {
    cfg.validate()?;
    let rungs = ladder(cfg)?;
    let d = cfg.hamiltonian.dim();
    let k = 1usize << cfg.qubits;
    let mut superops = vec![ComplexMatrix::zeros(d * d, d * d); k];
    for i in 0..d {
        for j in 0..d {
            let outs = simulate_blocks(&matrix_unit(d, i, j), cfg.qubits, &rungs);
            for (s, out) in superops.iter_mut().zip(outs) {
                s.set_column(i * d + j, &crate::linalg::vectorize(&out));
            }
        }
    }
    let maps = superops
        .into_iter()
        .map(|s| QuantumChannel::from_superoperator(s, d, d))
        .collect::<Result<Vec<_>>>()?;
    let outcomes = Dyadic::all(cfg.qubits)
        .map(|f| energy_from_outcome(f, cfg.time))
        .collect();
    MeasurementInstrument::new(outcomes, maps)
}

/// Target state after reading `f`, in the eigenbasis of `U(t)`, for input
/// amplitudes `alphas` on eigenphases `thetas` (ideal gates).
pub fn post_measurement_state(alphas: &[C64], thetas: &[f64], f: Dyadic) -> Result<ComplexVector> {
    if alphas.len() != thetas.len() {
        return Err(Error::DimMismatch(format!(
            "{} amplitudes for {} phases",
            alphas.len(),
            thetas.len()
        )));
    }
    let v = ComplexVector::from_iterator(
        alphas.len(),
        alphas
            .iter()
            .zip(thetas)
            .map(|(a, &th)| a * outcome_amplitude(f, th)),
    );
    let p = v.norm_squared();
    if p < 1e-14 {
        return Err(Error::ZeroProbabilityBranch(p));
    }
    Ok(v.unscale(p.sqrt()))
}

/// Outcome of the closeness test between `Q_N` and `P_N(. | theta + m phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosenessReport {
    /// `1 - a^{m 2^N}`.
    pub premise_value: f64,
    /// `delta / N`.
    pub premise_threshold: f64,
    pub premise_holds: bool,
    pub max_deviation: f64,
    /// `e^delta - 1`.
    pub bound: f64,
    pub within_bound: bool,
    pub within_two_delta: bool,
}

pub fn closeness_check(n: u32, delta: f64, theta: f64, a: f64, phi: f64, m: u64) -> ClosenessReport {
    let shifted = theta + m as f64 * phi;
    let max_deviation = Dyadic::all(n)
        .map(|f| (q_n(f, theta, a, phi, m) - p_n(f, shifted)).abs())
        .fold(0.0, f64::max);
    let premise_value = 1.0 - a.powf(m as f64 * 2f64.powi(n as i32));
    let premise_threshold = delta / n as f64;
    let bound = delta.exp_m1();
    ClosenessReport {
        premise_value,
        premise_threshold,
        premise_holds: premise_value <= premise_threshold,
        max_deviation,
        bound,
        within_bound: max_deviation <= bound,
        within_two_delta: max_deviation <= 2.0 * delta,
    }
}

/// `(a_{U(t/m)}, phi_{U(t/m)})` for a Hamiltonian.
pub fn slice_parameters(h: &Hamiltonian, t: f64, m: u64) -> Result<(f64, f64)> {
    let u = h.evolve(t / m as f64);
    Ok((coherence_factor(&u), crate::linalg::phase_factor(&u)?))
}
