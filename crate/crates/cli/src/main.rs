//! `hardy-lab`: run scenario files and suites, emit JSON and CSV reports.
//!
//! Exit codes: 0 when every check passes, 1 when any check fails, 2 on a
//! configuration or I/O error.

mod config;
mod run;
mod suite;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{ConfigError, Overrides};
use crate::run::ScenarioReport;

#[derive(Debug, Parser)]
#[command(
    name = "hardy-lab",
    version,
    about = "Finite-section checks for invariant subspaces on the Hardy space"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        config: PathBuf,
        /// Write the JSON report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the flat check table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Run every `*.json` scenario in a directory and aggregate the results.
    Suite {
        dir: PathBuf,
        /// Write the aggregate JSON here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
}

#[derive(Debug, Args)]
struct OverrideArgs {
    #[arg(long)]
    eps_residual: Option<f64>,
    #[arg(long)]
    eps_rank: Option<f64>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    guard: Option<usize>,
    /// Replaces the seed of every scenario.
    #[arg(long, env = "HARDY_LAB_SEED")]
    seed: Option<u64>,
}

impl From<&OverrideArgs> for Overrides {
    fn from(a: &OverrideArgs) -> Self {
        Self {
            degree: a.degree,
            guard: a.guard,
            eps_residual: a.eps_residual,
            eps_rank: a.eps_rank,
            seed: a.seed,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            out,
            csv,
            overrides,
        } => run_one(config, out.as_deref(), csv.as_deref(), &overrides.into()),
        Command::Suite {
            dir,
            out,
            overrides,
        } => suite::run_suite(dir, out.as_deref(), &overrides.into()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run_one(
    path: &Path,
    out: Option<&Path>,
    csv: Option<&Path>,
    overrides: &Overrides,
) -> Result<bool, ConfigError> {
    let loaded = config::load(path, overrides)?;
    let report = run::execute(&loaded);
    write_json(&report, out)?;
    if let Some(csv) = csv {
        write_csv(std::slice::from_ref(&report), csv)?;
    }
    summarize(&report);
    Ok(report.pass)
}

fn summarize(report: &ScenarioReport) {
    let status = if report.pass { "PASS" } else { "FAIL" };
    eprintln!(
        "{status} {} ({}): {} checks, {} failed",
        report.id,
        report.kind,
        report.checks.len(),
        report.failed_checks()
    );
    for c in report.checks.iter().filter(|c| !c.pass) {
        eprintln!(
            "  {}: residual {:e}, threshold {:e}",
            c.name, c.residual, c.threshold
        );
    }
}

pub(crate) fn write_json<T: serde::Serialize>(
    value: &T,
    out: Option<&Path>,
) -> Result<(), ConfigError> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize") + "\n";
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| {
            ConfigError::field(&p.display().to_string(), "", format!("cannot write: {e}"))
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub(crate) fn write_csv(reports: &[ScenarioReport], path: &Path) -> Result<(), ConfigError> {
    let io = |e: csv::Error| {
        ConfigError::field(
            &path.display().to_string(),
            "",
            format!("cannot write: {e}"),
        )
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["scenario", "check", "residual", "threshold", "pass"])
        .map_err(io)?;
    for r in reports {
        for c in &r.checks {
            w.write_record([
                r.id.as_str(),
                c.name.as_str(),
                &c.residual.to_string(),
                &c.threshold.to_string(),
                if c.pass { "true" } else { "false" },
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| {
        ConfigError::field(
            &path.display().to_string(),
            "",
            format!("cannot write: {e}"),
        )
    })
}
