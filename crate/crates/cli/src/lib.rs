//! Command-line runner: `pmesim <subcommand> [flags]`.
//!
//! Settings come from an optional flat TOML file (`--config`) overlaid with
//! flags. Each run produces one [`RunRecord`], written as a JSON line or as
//! CSV, to `--output`, to `$PMESIM_OUTPUT_DIR/<subcommand>-<seed>.<ext>`, or
//! to stdout.

pub mod config;
pub mod error;
pub mod run;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;

pub use config::{ConfigValues, ExperimentConfig, Format, ModeName, Subcommand};
pub use error::{CliError, CliResult};
pub use run::{run, RunRecord};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "PMESIM_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "pmesim", version, about = "Energy-measurement simulation experiments")]
pub struct Cli {
    #[arg(value_enum)]
    pub subcommand: Subcommand,
    /// Flat TOML file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Hilbert-space dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Evolution time (starting time for delta-max).
    #[arg(long)]
    pub time: Option<f64>,
    /// Controllization iterations.
    #[arg(long)]
    pub m: Option<u64>,
    /// Phase-estimation register size.
    #[arg(long)]
    pub qubits: Option<u32>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Target closeness between controllised and ideal distributions.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Energy resolution.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Spectral diameter of the random Hamiltonian.
    #[arg(long)]
    pub spread: Option<f64>,
    /// Moment order.
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeName>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Attach wall-clock time to the record.
    #[arg(long)]
    pub timing: bool,
}

impl Cli {
    pub fn flag_values(&self) -> ConfigValues {
        ConfigValues {
            dim: self.dim,
            time: self.time,
            m: self.m,
            qubits: self.qubits,
            shots: self.shots,
            trials: self.trials,
            seed: self.seed,
            delta: self.delta,
            epsilon: self.epsilon,
            spread: self.spread,
            r: self.r,
            mode: self.mode,
            output: self.output.clone(),
            format: self.format,
            timing: self.timing.then_some(true),
        }
    }
}

/// Resolves settings and runs, echoing file and flag values in the record.
pub fn execute(cli: &Cli) -> CliResult<RunRecord> {
    let file = cli.config.as_deref().map(ConfigValues::load).transpose()?;
    let flags = cli.flag_values();
    let merged = file.clone().unwrap_or_default().overlay(&flags);
    let config = ExperimentConfig::resolve(cli.subcommand, &merged)?;
    let start = Instant::now();
    let mut record = run(&config)?;
    if config.timing {
        record.wall_clock_seconds = Some(start.elapsed().as_secs_f64());
    }
    record.config_file = file;
    record.flags = Some(flags);
    Ok(record)
}

pub fn render(record: &RunRecord) -> CliResult<String> {
    match record.config.format {
        Format::Json => record.to_json_line(),
        Format::Csv => record.to_csv(),
    }
}

/// Where a record goes: the explicit path, the directory from the
/// environment, or stdout (`None`).
pub fn destination(config: &ExperimentConfig, env_dir: Option<PathBuf>) -> Option<PathBuf> {
    config.output.clone().or_else(|| {
        let ext = match config.format {
            Format::Json => "jsonl",
            Format::Csv => "csv",
        };
        env_dir.map(|d| d.join(format!("{}-{}.{ext}", config.subcommand.name(), config.seed)))
    })
}

fn write_record(record: &RunRecord) -> CliResult<()> {
    let text = render(record)?;
    let env_dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
    match destination(&record.config, env_dir) {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, text)?;
        }
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Entry point shared by the binary and tests; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli).and_then(|rec| write_record(&rec)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
