//! Report artifacts: evaluation/baseline JSON files and the consolidated
//! run comparison (table + convergence curves) as CSV.
//!
//! Reports are data only — no rendering — and contain no timestamps, so
//! identical inputs produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ptrnet_ea_core::portfolio::PortfolioReport;
use serde::{Deserialize, Serialize};

use crate::metrics;
use crate::runner::{RunMeta, RunPaths, RUN_SCHEMA_VERSION};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Shared shape for `eval` and `baseline` outputs so they can sit side by
/// side in one table.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    pub schema_version: u32,
    /// `eval-best`, `eval-portfolio`, `baseline-nn`, `baseline-two-opt`,
    /// or `baseline-oracle`.
    pub kind: String,
    pub dataset_path: String,
    pub dataset_sha256: String,
    pub dataset_n: usize,
    pub dataset_count: usize,
    /// Node count the evaluated policy was trained on; absent for baselines.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_n: Option<u32>,
    /// Mean tour length over the dataset.
    pub mean_length: f64,
    /// Sample standard deviation (n-1 denominator; 0 for a single instance).
    pub std_length: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub portfolio: Option<PortfolioSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PortfolioSection {
    pub policies: usize,
    pub member_means: Vec<f64>,
    pub contribution: Vec<f64>,
    pub best_member: usize,
    pub non_best_share: f64,
}

impl PortfolioSection {
    pub fn from_report(report: &PortfolioReport) -> Self {
        PortfolioSection {
            policies: report.member_means.len(),
            member_means: report.member_means.clone(),
            contribution: report.contribution.clone(),
            best_member: report.best_member,
            non_best_share: report.non_best_share,
        }
    }
}

impl EvalReport {
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// Mean and sample standard deviation of tour lengths.
pub fn mean_std(lengths: &[f64]) -> (f64, f64) {
    let n = lengths.len() as f64;
    let mean = lengths.iter().sum::<f64>() / n;
    if lengths.len() < 2 {
        return (mean, 0.0);
    }
    let var = lengths.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Consolidated view over several run directories.
pub struct RunReport {
    pub table_csv: String,
    pub curves_csv: String,
}

/// Reads each run directory's `run_meta.json` and `metrics.csv` and builds
/// one comparison table plus per-run convergence series. Runs with a foreign
/// schema version abort the report, listing every offender.
pub fn consolidate_runs(run_dirs: &[PathBuf]) -> Result<RunReport> {
    if run_dirs.is_empty() {
        bail!("report needs at least one run directory");
    }
    let mut runs = Vec::new();
    let mut offenders = Vec::new();
    for dir in run_dirs {
        let paths = RunPaths::new(dir);
        let meta: RunMeta = serde_json::from_str(
            &fs::read_to_string(&paths.meta)
                .with_context(|| format!("reading {}", paths.meta.display()))?,
        )
        .with_context(|| format!("parsing {}", paths.meta.display()))?;
        if meta.schema_version != RUN_SCHEMA_VERSION {
            offenders.push(format!("{} (schema {})", dir.display(), meta.schema_version));
            continue;
        }
        let rows = metrics::read_rows(&paths.metrics)
            .with_context(|| format!("reading {}", paths.metrics.display()))?;
        runs.push((meta, rows));
    }
    if !offenders.is_empty() {
        bail!("schema version mismatch in: {}", offenders.join(", "));
    }

    let mut table = String::from(
        "tag,seed,n,population_size,sigma_rule,normalize_acceptance,max_iterations,iterations_run,budget_exhausted,final_best_fitness,final_mean_sigma\n",
    );
    for (meta, rows) in &runs {
        let final_sigma = rows.last().map_or(f64::NAN, |r| r.mean_sigma);
        let _ = writeln!(
            table,
            "{},{},{},{},{},{},{},{},{},{},{}",
            meta.tag,
            meta.seed,
            meta.n,
            meta.population_size,
            meta.sigma_rule,
            meta.normalize_acceptance,
            meta.max_iterations,
            meta.iterations_run,
            meta.budget_exhausted,
            meta.final_best_fitness,
            final_sigma
        );
    }

    let mut curves = String::from("tag,seed,t,best_fitness,mean_fitness,mean_sigma\n");
    for (meta, rows) in &runs {
        for row in rows {
            let _ = writeln!(
                curves,
                "{},{},{},{},{},{}",
                meta.tag, meta.seed, row.t, row.best_fitness, row.mean_fitness, row.mean_sigma
            );
        }
    }
    Ok(RunReport { table_csv: table, curves_csv: curves })
}

pub fn write_run_report(report: &RunReport, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(out_dir)?;
    let table = out_dir.join("table.csv");
    let curves = out_dir.join("curves.csv");
    fs::write(&table, &report.table_csv)?;
    fs::write(&curves, &report.curves_csv)?;
    Ok((table, curves))
}
