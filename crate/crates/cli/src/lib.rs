//! Config-driven runner for the probe no-signalling experiments.

pub mod build;
pub mod config;
pub mod error;
pub mod run;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

pub use config::{parse_config, parse_str, ExperimentConfig};
pub use error::CliError;
pub use run::{execute, Overrides, Report};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "probecheck", version, about = "Run probe no-signalling experiments from a JSON config")]
pub struct Cli {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the config's tolerance.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Override the config's trial count.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Include wall time in the report. Reports are then no longer
    /// reproducible byte for byte.
    #[arg(long)]
    pub timing: bool,
}

/// Exit code for a finished run.
pub fn exit_code(report: &Report) -> i32 {
    if report.pass {
        0
    } else {
        1
    }
}

/// Parses, runs and renders; returns the rendered report and its exit code.
pub fn run_cli(cli: &Cli) -> Result<(String, i32), CliError> {
    let config = parse_config(&cli.config)?;
    let overrides = Overrides {
        seed: cli.seed,
        tolerance: cli.tolerance,
        trials: cli.trials,
    };
    let config = overrides.apply(config);
    if !(config.tolerance.is_finite() && config.tolerance >= 0.0) {
        return Err(CliError::Schema {
            pointer: "/tolerance".into(),
            message: "tolerance must be a non-negative number".into(),
        });
    }
    let report = execute(&config, cli.timing)?;
    let text = match cli.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv()?,
    };
    Ok((text, exit_code(&report)))
}

/// Full command-line behaviour, writing to `out` unless `--out` is given.
pub fn main_with(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (text, code) = match run_cli(cli) {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &text).map_err(|e| e.to_string()),
        None => out.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: cannot write report: {e}");
        return 2;
    }
    code
}
