//! Directory runs: parallel execution, sequential aggregation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{self, ConfigError, Overrides};
use crate::run::{self, ScenarioReport};

pub const AGGREGATE_SCHEMA: &str = "hardy-lab/aggregate";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub schema: String,
    pub schema_version: u32,
    pub pass: bool,
    pub passed: usize,
    pub failed: usize,
    pub by_tag: BTreeMap<String, TagSummary>,
    pub scenarios: Vec<ScenarioSummary>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TagSummary {
    pub passed: usize,
    pub failed: usize,
    pub worst_residual: f64,
    /// Largest `residual / threshold` over all checks of the tag.
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub file: String,
    pub id: String,
    pub kind: String,
    pub tag: String,
    pub pass: bool,
    pub checks: usize,
    pub failed_checks: usize,
    pub worst_residual: f64,
    pub failures: Vec<String>,
}

fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>, ConfigError> {
    let name = dir.display().to_string();
    let entries = std::fs::read_dir(dir)
        .map_err(|e| ConfigError::field(&name, "", format!("cannot read directory: {e}")))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| ConfigError::field(&name, "", format!("cannot read directory: {e}")))?
            .path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn run_suite(
    dir: &Path,
    out: Option<&Path>,
    overrides: &Overrides,
) -> Result<bool, ConfigError> {
    let files = scenario_files(dir)?;
    let loaded = files
        .iter()
        .map(|f| config::load(f, overrides))
        .collect::<Result<Vec<_>, _>>()?;
    let reports: Vec<ScenarioReport> = loaded.par_iter().map(run::execute).collect();
    let aggregate = aggregate(&files, &reports);
    crate::write_json(&aggregate, out)?;
    eprintln!(
        "{} scenarios: {} passed, {} failed",
        reports.len(),
        aggregate.passed,
        aggregate.failed
    );
    for s in aggregate.scenarios.iter().filter(|s| !s.pass) {
        eprintln!("  FAIL {} ({} failed checks)", s.id, s.failed_checks);
    }
    Ok(aggregate.pass)
}

pub fn aggregate(files: &[PathBuf], reports: &[ScenarioReport]) -> Aggregate {
    let mut by_tag: BTreeMap<String, TagSummary> = BTreeMap::new();
    let mut scenarios = Vec::new();
    for (file, r) in files.iter().zip(reports) {
        let tag = by_tag.entry(r.tag.clone()).or_default();
        if r.pass {
            tag.passed += 1;
        } else {
            tag.failed += 1;
        }
        tag.worst_residual = tag.worst_residual.max(r.worst_residual());
        let mut as_report = hardy_lab::VerificationReport::new(&r.id);
        as_report.checks = r.checks.clone();
        tag.worst_ratio = tag.worst_ratio.max(as_report.worst_ratio());
        scenarios.push(ScenarioSummary {
            file: file
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            id: r.id.clone(),
            kind: r.kind.clone(),
            tag: r.tag.clone(),
            pass: r.pass,
            checks: r.checks.len(),
            failed_checks: r.failed_checks(),
            worst_residual: r.worst_residual(),
            failures: r
                .checks
                .iter()
                .filter(|c| !c.pass)
                .map(|c| c.name.clone())
                .collect(),
        });
    }
    let passed = reports.iter().filter(|r| r.pass).count();
    Aggregate {
        schema: AGGREGATE_SCHEMA.into(),
        schema_version: config::SCHEMA_VERSION,
        pass: passed == reports.len(),
        passed,
        failed: reports.len() - passed,
        by_tag,
        scenarios,
    }
}
