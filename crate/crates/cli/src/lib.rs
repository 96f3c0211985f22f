//! Config-driven experiment runner tying the toolkit together: each
//! subcommand reads a JSON config, runs a seeded experiment, and writes a
//! provenance-stamped JSON report plus CSV tables. Identical config and
//! seed give byte-identical reports, independent of the thread count.

pub mod commands;
pub mod config;
pub mod report;

use std::path::{Path, PathBuf};

use config::{ExperimentConfig, SUBCOMMANDS};
use report::Report;

/// Exit code 2: configuration or usage error.
/// Exit code 3: runtime failure.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<willsim_core::Error> for CliError {
    fn from(e: willsim_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub const USAGE: &str = "usage: willsim <subcommand> --config <path> [--out <dir>] [--seed <u64>] [--threads <n>]

subcommands:
  simulate-crs        coverage sweep of full response sessions over a size grid
  infer               elicitation-inference recovery with holdout validation
  verify-a7           Monte Carlo check of agreement/pair vote semantics
  evaluate-policy     value functions and optimal action on a universe file
  estimate-willpower  Fermi estimate of aligned terawatts from a regime dataset
  coverage-scan       exact per-capita coverage law and physical sensing limits

exit codes: 0 success, 2 config error, 3 runtime error";

#[derive(Debug, Clone)]
pub struct CliArgs {
    pub subcommand: String,
    pub config_path: PathBuf,
    pub out_dir: Option<PathBuf>,
    pub seed_override: Option<u64>,
    pub threads: usize,
}

pub fn parse_args(args: &[String]) -> Result<CliArgs, CliError> {
    let mut it = args.iter();
    let subcommand = it
        .next()
        .ok_or_else(|| CliError::Config(format!("missing subcommand\n{USAGE}")))?
        .clone();
    if !SUBCOMMANDS.contains(&subcommand.as_str()) {
        return Err(CliError::Config(format!(
            "unknown subcommand '{subcommand}'\n{USAGE}"
        )));
    }
    let mut config_path = None;
    let mut out_dir = None;
    let mut seed_override = None;
    let mut threads = 1usize;
    while let Some(flag) = it.next() {
        let mut value = || {
            it.next()
                .ok_or_else(|| CliError::Config(format!("flag {flag} needs a value")))
        };
        match flag.as_str() {
            "--config" => config_path = Some(PathBuf::from(value()?)),
            "--out" => out_dir = Some(PathBuf::from(value()?)),
            "--seed" => {
                seed_override = Some(value()?.parse::<u64>().map_err(|e| {
                    CliError::Config(format!("bad --seed value: {e}"))
                })?)
            }
            "--threads" => {
                threads = value()?
                    .parse::<usize>()
                    .map_err(|e| CliError::Config(format!("bad --threads value: {e}")))?
                    .max(1)
            }
            other => {
                return Err(CliError::Config(format!("unknown flag '{other}'\n{USAGE}")));
            }
        }
    }
    Ok(CliArgs {
        subcommand,
        config_path: config_path
            .ok_or_else(|| CliError::Config(format!("--config is required\n{USAGE}")))?,
        out_dir,
        seed_override,
        threads,
    })
}

/// Loads the config, runs the subcommand, writes the report files.
/// Nothing is written unless the whole run succeeds.
pub fn run(args: &CliArgs) -> Result<Report, CliError> {
    let raw = std::fs::read_to_string(&args.config_path).map_err(|e| {
        CliError::Config(format!("cannot read {}: {e}", args.config_path.display()))
    })?;
    let envelope: ExperimentConfig = serde_json::from_str(&raw).map_err(|e| {
        CliError::Config(format!(
            "invalid config {}: {e}",
            args.config_path.display()
        ))
    })?;
    if envelope.subcommand != args.subcommand {
        return Err(CliError::Config(format!(
            "config is for subcommand '{}', command line says '{}'",
            envelope.subcommand, args.subcommand
        )));
    }
    let seed = args.seed_override.unwrap_or(envelope.seed);
    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| envelope.out_dir.as_ref().map(PathBuf::from))
        .ok_or_else(|| {
            CliError::Config("no output directory: set --out or out_dir in the config".into())
        })?;
    let config_dir = args
        .config_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));

    let report = commands::dispatch(
        &args.subcommand,
        &envelope.params,
        seed,
        args.threads,
        &config_dir,
    )?;
    report.write_to(&out_dir).map_err(|e| {
        CliError::Runtime(format!("cannot write report to {}: {e}", out_dir.display()))
    })?;
    Ok(report)
}

/// Full entry point used by `main` and by tests.
pub fn run_main(args: &[String]) -> i32 {
    match parse_args(args) {
        Ok(parsed) => match run(&parsed) {
            Ok(report) => {
                println!(
                    "{}: report written ({} files)",
                    parsed.subcommand,
                    report.file_count()
                );
                0
            }
            Err(e) => {
                eprintln!("error: {}", e.message());
                e.exit_code()
            }
        },
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
