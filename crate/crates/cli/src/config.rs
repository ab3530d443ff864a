//! Experiment configuration: flat TOML files merged with command-line flags.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    /// Randomised decoupling channel and its distance to the controlled gate.
    Controllize,
    /// Phase-estimation outcome distribution and instrument metrics.
    Pea,
    /// One-clean-qubit coherence estimate.
    Dqc1,
    /// Spectral-diameter search.
    DeltaMax,
    /// Trace moments of Haar-random unitaries.
    Cue,
    /// Sizing recipe, measured and bounded metrics.
    Metrics,
    /// Concentration bounds, optionally with a Monte-Carlo check.
    Bounds,
    /// Controllised phase-estimation distributions over register size and coherence.
    Fig3,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Controllize => "controllize",
            Subcommand::Pea => "pea",
            Subcommand::Dqc1 => "dqc1",
            Subcommand::DeltaMax => "delta-max",
            Subcommand::Cue => "cue",
            Subcommand::Metrics => "metrics",
            Subcommand::Bounds => "bounds",
            Subcommand::Fig3 => "fig3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Ideal,
    Controllized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Partially specified settings, as read from a file or from flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigValues {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qubits: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spread: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<bool>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        ConfigValues { $($field: $top.$field.clone().or_else(|| $base.$field.clone()),)* }
    };
}

impl ConfigValues {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::ConfigInvalid(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// `top` wins wherever it has a value.
    pub fn overlay(&self, top: &ConfigValues) -> ConfigValues {
        overlay!(
            self, top, dim, time, m, qubits, shots, trials, seed, delta, epsilon, spread, r, mode, output,
            format, timing
        )
    }
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub subcommand: Subcommand,
    pub dim: usize,
    pub time: f64,
    /// `None` lets the subcommand derive it.
    pub m: Option<u64>,
    pub qubits: u32,
    pub shots: u64,
    pub trials: Option<usize>,
    pub seed: u64,
    pub delta: f64,
    pub epsilon: Option<f64>,
    pub spread: f64,
    pub r: usize,
    pub mode: ModeName,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub timing: bool,
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> CliResult<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::ConfigInvalid(msg()))
    }
}

impl ExperimentConfig {
    /// Fills defaults and validates ranges.
    pub fn resolve(subcommand: Subcommand, values: &ConfigValues) -> CliResult<Self> {
        let seed = match (subcommand, values.seed) {
            (_, Some(s)) => s,
            (Subcommand::Fig3, None) => 0,
            (_, None) => return Err(CliError::ConfigInvalid("--seed is required".into())),
        };
        let cfg = Self {
            subcommand,
            dim: values.dim.unwrap_or(2),
            time: values.time.unwrap_or(1.0),
            m: values.m,
            qubits: values.qubits.unwrap_or(3),
            shots: values.shots.unwrap_or(10_000),
            trials: values.trials,
            seed,
            delta: values.delta.unwrap_or(0.1),
            epsilon: values.epsilon,
            spread: values.spread.unwrap_or(1.0),
            r: values.r.unwrap_or(1),
            mode: values.mode.unwrap_or(ModeName::Ideal),
            output: values.output.clone(),
            format: values.format.unwrap_or_default(),
            timing: values.timing.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> CliResult<()> {
        check((1..=64).contains(&self.dim), || format!("dim must be in 1..=64, got {}", self.dim))?;
        check(self.time > 0.0 && self.time.is_finite(), || {
            format!("time must be positive and finite, got {}", self.time)
        })?;
        check(self.m.is_none_or(|m| m >= 1), || "m must be at least 1".into())?;
        check((1..=20).contains(&self.qubits), || {
            format!("qubits must be in 1..=20, got {}", self.qubits)
        })?;
        check(self.shots >= 1, || "shots must be at least 1".into())?;
        check(self.trials.is_none_or(|t| t >= 1), || "trials must be at least 1".into())?;
        check(self.delta > 0.0 && self.delta <= 0.5, || {
            format!("delta must be in (0, 0.5], got {}", self.delta)
        })?;
        check(self.epsilon.is_none_or(|e| e > 0.0 && e.is_finite()), || {
            "epsilon must be positive".into()
        })?;
        check(self.spread >= 0.0 && self.spread.is_finite(), || {
            format!("spread must be non-negative, got {}", self.spread)
        })?;
        check(self.r >= 1, || "r must be at least 1".into())?;
        Ok(())
    }
}
