//! Subcommand dispatch.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use pmesim_core::controllization::{
    diamond_distance_closed_form, diamond_witness, gamma_iterated, gamma_iterated_composed,
    DEFAULT_COMPOSITION_BUDGET,
};
use pmesim_core::cue::{
    bernstein_bound, central_moment_bound, concentration_experiment, cue_bound_spec, cue_moment,
    exact_central_moment, extended_bennett_bound, extended_bernstein_bound,
};
use pmesim_core::linalg::{random_density, random_hamiltonian};
use pmesim_core::metrics::{
    evaluate, optimal_epsilon, r1_bound_ideal, r1_pea_bound, runtime_ledger, shifted_hamiltonian, sizing_recipe,
    MetricSummaryRow, DEFAULT_LAMBDA_SAMPLES,
};
use pmesim_core::pea::{min_iterations, q_n, run_pea, slice_parameters, Dyadic};
use pmesim_core::trace_estimation::{
    delta_max_search, dqc1_state, estimate_coherence_known, sigma_z_expectation, success_probability_bounds,
    SearchOptions,
};
use pmesim_core::{
    seeded, ControllizationSpec, DensityMatrix, Error as CoreError, Hamiltonian, MetricReport, PeaConfig, PeaMode,
    ResourceLedger, SimRng,
};

use crate::config::{ConfigValues, ExperimentConfig, ModeName, Subcommand};
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Largest target dimension accepted by `controllize` (superoperators of
/// size `(2d)^2`).
pub const CONTROLLIZE_DIM_LIMIT: usize = 8;

/// Coherence panels and register sizes of the `fig3` sweep.
pub const FIG3_COHERENCES: [f64; 3] = [1.0, 0.99, 0.9];
pub const FIG3_QUBITS: [u32; 4] = [1, 2, 3, 4];

/// Header and rows for CSV export.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

fn cell<T: ToString>(x: T) -> String {
    x.to_string()
}

fn opt_cell<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub artifact_version: String,
    pub subcommand: Subcommand,
    pub config: ExperimentConfig,
    /// Values read from `--config`, before flags were applied.
    pub config_file: Option<ConfigValues>,
    /// Values given on the command line.
    pub flags: Option<ConfigValues>,
    pub results: Value,
    pub ledger: ResourceLedger,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
    #[serde(skip)]
    pub table: Table,
}

impl RunRecord {
    pub fn to_json_line(&self) -> CliResult<String> {
        let mut s = serde_json::to_string(self)
            .map_err(|e| CliError::NumericalFailure(format!("serialising record: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
        w.write_record(&self.table.header).map_err(io)?;
        for row in &self.table.rows {
            w.write_record(row).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| CliError::NumericalFailure(e.to_string()))
    }
}

struct Outcome {
    results: Value,
    ledger: ResourceLedger,
    table: Table,
}

/// Runs one experiment. Identical configs give identical records.
pub fn run(config: &ExperimentConfig) -> CliResult<RunRecord> {
    let out = match config.subcommand {
        Subcommand::Controllize => controllize(config)?,
        Subcommand::Pea => pea(config)?,
        Subcommand::Dqc1 => dqc1(config)?,
        Subcommand::DeltaMax => delta_max(config)?,
        Subcommand::Cue => cue(config)?,
        Subcommand::Metrics => metrics(config)?,
        Subcommand::Bounds => bounds(config)?,
        Subcommand::Fig3 => fig3()?,
    };
    Ok(RunRecord {
        schema_version: SCHEMA_VERSION,
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: config.subcommand,
        config: config.clone(),
        config_file: None,
        flags: None,
        results: out.results,
        ledger: out.ledger,
        wall_clock_seconds: None,
        table: out.table,
    })
}

/// Short digest of the settings that determine the results.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let mut key = config.clone();
    key.output = None;
    key.format = Default::default();
    key.timing = false;
    let bytes = serde_json::to_vec(&key).expect("config serialises");
    let digest = Sha256::digest(&bytes);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("result types serialise")
}

fn hamiltonian(config: &ExperimentConfig, rng: &mut SimRng) -> Hamiltonian {
    random_hamiltonian(config.dim, config.spread, rng)
}

fn controllize(config: &ExperimentConfig) -> CliResult<Outcome> {
    let d = config.dim;
    if d > CONTROLLIZE_DIM_LIMIT {
        return Err(CliError::BudgetExceeded(format!(
            "controllize supports dim <= {CONTROLLIZE_DIM_LIMIT}, got {d}"
        )));
    }
    let mut rng = seeded(config.seed);
    let h = hamiltonian(config, &mut rng);
    let m = config.m.unwrap_or(4);
    let m_usize =
        usize::try_from(m).map_err(|_| CliError::BudgetExceeded(format!("m = {m} does not fit in memory")))?;
    let spec = ControllizationSpec::with_default_set(h.clone(), config.time, m_usize)?;
    let gamma_m = gamma_iterated(&spec);
    let composed_diff = match gamma_iterated_composed(&spec, DEFAULT_COMPOSITION_BUDGET) {
        Ok(c) => Some(c.max_abs_diff(&gamma_m)),
        Err(CoreError::IterationOverflow { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let a = spec.slice_coherence();
    let phi = spec.slice_phase()?;
    let diamond = diamond_distance_closed_form(&spec);
    let witness = diamond_witness(&spec)?;
    let spread_time = h.delta_max() * config.time;

    let mut table = Table::new(&[
        "dim", "time", "m", "slice_coherence", "slice_phase", "coherence", "diamond_distance", "witness",
    ]);
    table.push(vec![
        cell(d),
        cell(config.time),
        cell(m),
        cell(a),
        cell(phi),
        cell(spec.coherence()),
        cell(diamond),
        cell(witness),
    ]);
    let mut ledger = ResourceLedger::empty();
    ledger.record(m, config.time / m as f64);
    Ok(Outcome {
        results: json!({
            "energies": h.energies(),
            "spread_time": spread_time,
            "within_window": spread_time < FRAC_PI_2,
            "slice_coherence": a,
            "slice_phase": phi,
            "coherence": spec.coherence(),
            "diamond_distance": diamond,
            "witness_trace_norm": witness,
            "closed_form_vs_composed": composed_diff,
            "choi_min_eigenvalue": gamma_m.choi_min_eigenvalue(),
            "trace_preservation_defect": gamma_m.trace_preservation_defect(),
            "superoperator": to_value(&gamma_m.to_json()),
        }),
        ledger,
        table,
    })
}

struct PeaRun {
    h: Hamiltonian,
    m: u64,
    epsilon: f64,
    rows: Vec<pmesim_core::pea::OutcomeRow>,
    report: MetricReport,
    r1_bound: f64,
    premise_holds: bool,
    ledger: ResourceLedger,
}

fn pea_run(config: &ExperimentConfig) -> CliResult<PeaRun> {
    let (d, n, t) = (config.dim, config.qubits, config.time);
    let mut rng = seeded(config.seed);
    let h = hamiltonian(config, &mut rng);
    let input = DensityMatrix::new(random_density(d, &mut rng), vec![d])?;
    let m = match config.mode {
        ModeName::Ideal => 1,
        ModeName::Controllized => match config.m {
            Some(m) => m,
            None => min_iterations(h.delta_max(), t, n, config.delta)?,
        },
    };
    let mode = match config.mode {
        ModeName::Ideal => PeaMode::Ideal,
        ModeName::Controllized => PeaMode::Controllized { m },
    };
    let (dist, instr) = run_pea(&PeaConfig::new(n, h.clone(), t, mode, input))?;
    let epsilon = config.epsilon.unwrap_or_else(|| optimal_epsilon(t, n));
    let ideal_bound = r1_bound_ideal(epsilon, t, n);
    let within_window = h.delta_max() * t < FRAC_PI_2;
    let (target, r1_bound, premise_holds) = match config.mode {
        ModeName::Ideal => (h.clone(), ideal_bound, within_window),
        ModeName::Controllized => {
            let (a, _) = slice_parameters(&h, t, m)?;
            let premise = 1.0 - a.powf(m as f64 * 2f64.powi(n as i32)) <= config.delta / n as f64;
            (
                shifted_hamiltonian(&h, t, m)?,
                r1_pea_bound(ideal_bound, config.delta, t, n),
                within_window && premise,
            )
        }
    };
    let report = evaluate(&instr, &target, DEFAULT_LAMBDA_SAMPLES, &mut rng)?;
    Ok(PeaRun {
        h,
        m,
        epsilon,
        rows: dist.rows(),
        report,
        r1_bound,
        premise_holds,
        ledger: runtime_ledger(n, t, m),
    })
}

fn pea(config: &ExperimentConfig) -> CliResult<Outcome> {
    let run = pea_run(config)?;
    let mut table = Table::new(&["n", "f", "prob", "energy"]);
    for r in &run.rows {
        table.push(vec![cell(r.n), cell(r.f), cell(r.prob), cell(r.energy)]);
    }
    Ok(Outcome {
        results: json!({
            "energies": run.h.energies(),
            "spread_time": run.h.delta_max() * config.time,
            "m": run.m,
            "epsilon": run.epsilon,
            "distribution": to_value(&run.rows),
            "metrics": to_value(&run.report),
            "r1_bound": run.r1_bound,
            "bound_premise_holds": run.premise_holds,
        }),
        ledger: run.ledger,
        table,
    })
}

fn dqc1(config: &ExperimentConfig) -> CliResult<Outcome> {
    let mut rng = seeded(config.seed);
    let h = hamiltonian(config, &mut rng);
    let est = estimate_coherence_known(&h, config.time, config.shots, &mut rng)?;
    let u = h.evolve(config.time);
    let reference_sigma_z = sigma_z_expectation(&dqc1_state(&u));
    let normalised_trace = u.trace() / pmesim_core::C64::new(config.dim as f64, 0.0);
    let mut table = Table::new(&["tau", "shots", "raw_mean", "a_hat", "stderr", "exact_a"]);
    table.push(vec![
        cell(est.tau),
        cell(est.shots),
        cell(est.raw_mean),
        cell(est.a_hat),
        cell(est.stderr),
        opt_cell(est.exact_a),
    ]);
    let mut ledger = ResourceLedger::empty();
    ledger.record(config.shots, config.time);
    Ok(Outcome {
        results: json!({
            "estimate": to_value(&est),
            "reference_sigma_z": reference_sigma_z,
            "normalised_trace": [normalised_trace.re, normalised_trace.im],
        }),
        ledger,
        table,
    })
}

fn delta_max(config: &ExperimentConfig) -> CliResult<Outcome> {
    let mut rng = seeded(config.seed);
    let h = hamiltonian(config, &mut rng);
    let opts = SearchOptions {
        shots: config.shots,
        ..SearchOptions::default()
    };
    let res = delta_max_search(&h, config.time, opts, &mut rng)?;
    let mut table = Table::new(&["k", "tau", "estimate", "stderr", "shots", "passed"]);
    for s in &res.history {
        table.push(vec![
            cell(s.k),
            cell(s.tau),
            cell(s.estimate),
            cell(s.stderr),
            cell(s.shots),
            cell(s.passed),
        ]);
    }
    Ok(Outcome {
        results: json!({
            "k_prime": res.k_prime,
            "bound": res.bound,
            "true_delta_max": h.delta_max(),
            "bound_exceeds_truth": res.bound > h.delta_max(),
            "threshold": res.threshold,
            "history": to_value(&res.history),
        }),
        ledger: res.ledger,
        table,
    })
}

fn cue(config: &ExperimentConfig) -> CliResult<Outcome> {
    let mut rng = seeded(config.seed);
    let rep = cue_moment(config.dim, config.r, config.trials.unwrap_or(10_000), &mut rng)?;
    let mut table = Table::new(&["d", "r", "empirical", "stderr", "analytic", "exact"]);
    table.push(vec![
        cell(rep.d),
        cell(rep.r),
        cell(rep.empirical),
        cell(rep.stderr),
        cell(rep.analytic),
        opt_cell(rep.exact),
    ]);
    Ok(Outcome {
        results: to_value(&rep),
        ledger: ResourceLedger::empty(),
        table,
    })
}

fn metrics(config: &ExperimentConfig) -> CliResult<Outcome> {
    let run = pea_run(config)?;
    let plan = sizing_recipe(config.spread, run.epsilon)?;
    let summary = MetricSummaryRow {
        config_hash: config_hash(config),
        r1: run.report.r1,
        r1_bound: run.r1_bound,
        r2: run.report.r2,
        t_pe: run.ledger.total_evolution_time,
    };
    let mut table = Table::new(&["config_hash", "r1", "r1_bound", "r2", "t_pe"]);
    table.push(vec![
        summary.config_hash.clone(),
        cell(summary.r1),
        cell(summary.r1_bound),
        cell(summary.r2),
        cell(summary.t_pe),
    ]);
    Ok(Outcome {
        results: json!({
            "summary": to_value(&summary),
            "metrics": to_value(&run.report),
            "m": run.m,
            "epsilon": run.epsilon,
            "bound_premise_holds": run.premise_holds,
            "sizing_plan": to_value(&plan),
        }),
        ledger: run.ledger,
        table,
    })
}

fn bounds(config: &ExperimentConfig) -> CliResult<Outcome> {
    let d = config.dim;
    let success = success_probability_bounds(d)?;
    let spec = cue_bound_spec(d)?;
    let ext_bernstein = extended_bernstein_bound(&spec).ok();
    let ext_bennett = extended_bennett_bound(&spec).ok();
    let r = config.r.max(2);
    let central = central_moment_bound(d, r)?;
    let exact_central = exact_central_moment(d, r).ok();
    let mut rng = seeded(config.seed);
    let conc = config
        .trials
        .map(|n| concentration_experiment(d, n, &mut rng))
        .transpose()?;

    let mut table = Table::new(&[
        "d",
        "full_time_bound",
        "half_time_bound",
        "extended_bernstein",
        "extended_bennett",
        "central_moment_r",
        "central_moment_bound",
        "exact_central_moment",
        "full_time_exceedance",
        "half_time_exceedance",
        "parity_exceedance",
    ]);
    table.push(vec![
        cell(d),
        cell(success.full_time),
        cell(success.half_time),
        opt_cell(ext_bernstein),
        opt_cell(ext_bennett),
        cell(r),
        cell(central),
        opt_cell(exact_central),
        opt_cell(conc.as_ref().map(|c| c.full_time_exceedance)),
        opt_cell(conc.as_ref().map(|c| c.half_time_exceedance)),
        opt_cell(conc.as_ref().map(|c| c.parity_exceedance)),
    ]);
    Ok(Outcome {
        results: json!({
            "success_bounds": to_value(&success),
            "bound_spec": to_value(&spec),
            "bernstein": bernstein_bound(&spec),
            "extended_bernstein": ext_bernstein,
            "extended_bennett": ext_bennett,
            "central_moment_r": r,
            "central_moment_bound": central,
            "exact_central_moment": exact_central,
            "concentration": conc.as_ref().map(to_value),
            "concentration_within_bounds": conc.as_ref().map(|c| c.within_bounds()),
        }),
        ledger: ResourceLedger::empty(),
        table,
    })
}

/// Per-panel summary of the `fig3` sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig3Summary {
    pub coherence: f64,
    pub qubits: u32,
    pub max_bin: f64,
    /// `2^N` times the largest bin probability.
    pub sharpness: f64,
    /// Ratio of sharpness to that at `N - 1`.
    pub gain: Option<f64>,
}

/// `(coherence, N, f, probability)`.
pub type Fig3Point = (f64, u32, Dyadic, f64);

/// `Q_N(2 pi f | theta = 0, phi = 0)` for every panel, and the summary.
pub fn fig3_sweep() -> (Vec<Fig3Point>, Vec<Fig3Summary>) {
    let mut points = Vec::new();
    let mut summary = Vec::new();
    for &c in &FIG3_COHERENCES {
        let mut prev: Option<f64> = None;
        for &n in &FIG3_QUBITS {
            let probs: Vec<(Dyadic, f64)> = Dyadic::all(n).map(|f| (f, q_n(f, 0.0, c, 0.0, 1))).collect();
            let max_bin = probs.iter().map(|p| p.1).fold(0.0, f64::max);
            let sharpness = max_bin * 2f64.powi(n as i32);
            summary.push(Fig3Summary {
                coherence: c,
                qubits: n,
                max_bin,
                sharpness,
                gain: prev.map(|p| sharpness / p),
            });
            prev = Some(sharpness);
            points.extend(probs.into_iter().map(|(f, p)| (c, n, f, p)));
        }
    }
    (points, summary)
}

fn fig3() -> CliResult<Outcome> {
    let (points, summary) = fig3_sweep();
    let mut table = Table::new(&["coherence", "qubits", "n", "f", "prob"]);
    for (c, n, f, p) in &points {
        table.push(vec![cell(c), cell(n), cell(f.numerator()), cell(f.value()), cell(p)]);
    }
    let points_json: Vec<Value> = points
        .iter()
        .map(|(c, n, f, p)| json!({"coherence": c, "qubits": n, "n": f.numerator(), "f": f.value(), "prob": p}))
        .collect();
    Ok(Outcome {
        results: json!({ "points": points_json, "summary": to_value(&summary) }),
        ledger: ResourceLedger::empty(),
        table,
    })
}
