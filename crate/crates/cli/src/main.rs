use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::anyhow;
use chrono::{SecondsFormat, Utc};
use clap::{Parser, Subcommand};
use ruelle_core::symbolic::enumeration_budget;

mod commands;
mod config;
mod error;
mod report;

use commands::Which;
use config::Experiment;
use error::CliError;
use report::{write_json, Manifest};

/// Thermodynamic-formalism experiments on one-sided shifts.
#[derive(Parser, Debug)]
#[command(name = "ruelle-lab", version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: the config's `out`, else `ruelle-out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Maximal eigen-data of the transfer operator.
    Rpf,
    /// Pressure, energy and entropy along a β grid.
    Scan,
    /// Run verification checks.
    Verify {
        #[arg(value_enum, default_value = "all")]
        which: Which,
    },
    /// Finite-volume and specific entropies of a measure.
    Entropy,
    /// Sample a path from a measure.
    Sample,
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Rpf => "rpf".into(),
            Command::Scan => "scan".into(),
            Command::Verify { which } => format!("verify {}", format!("{which:?}").to_lowercase()),
            Command::Entropy => "entropy".into(),
            Command::Sample => "sample".into(),
        }
    }
}

fn configure_jobs(jobs: Option<usize>) -> Result<(), CliError> {
    let Some(n) = jobs else { return Ok(()) };
    if n == 0 {
        return Err(CliError::Config(anyhow!("--jobs must be positive")));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(anyhow!("cannot configure thread pool: {e}")))?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    configure_jobs(cli.jobs)?;
    let path = cli.config.ok_or_else(|| CliError::Config(anyhow!("--config is required")))?;
    let started_at = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
    let exp = Experiment::load(&path, cli.seed)?;
    let out = cli.out.or_else(|| exp.config.out.clone()).unwrap_or_else(|| "ruelle-out".into());
    fs::create_dir_all(&out)?;

    let outcome = match &cli.command {
        Command::Rpf => commands::rpf(&exp, &out),
        Command::Scan => commands::scan(&exp, &out),
        Command::Verify { which } => commands::verify(&exp, &out, *which),
        Command::Entropy => commands::entropy(&exp, &out),
        Command::Sample => commands::sample(&exp, &out),
    }?;
    for check in &outcome.checks {
        println!("{}", check.summary());
    }
    let passed = outcome.checks.iter().filter(|c| c.counts()).all(|c| c.passed);
    let mut outputs = outcome.outputs;
    outputs.push("manifest.json".into());
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        config: exp.raw.clone(),
        seed: exp.config.seed,
        budget: enumeration_budget(),
        started_at,
        finished_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        passed,
        checks: outcome.checks,
        outputs,
    };
    write_json(&out, "manifest.json", &manifest)?;
    if outcome.numeric_failures > 0 {
        return Err(CliError::Numeric(anyhow!("{} grid points failed", outcome.numeric_failures)));
    }
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
