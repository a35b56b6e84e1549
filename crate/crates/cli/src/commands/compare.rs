//! `compare`: aggregate decode runs into one table. Each row pulls the
//! run's summary and manifest; an `ar_report.json` or `rm_ar_report.json`
//! in the run directory contributes the mean agreement rate, and the
//! timing sidecar contributes the runtime column.

use std::path::{Path, PathBuf};

use crate::formats::{
    save_comparison, ARReportFile, CompareRow, ComparisonReport, DecodeSummary, FORMAT_VERSION,
};
use crate::rundir::{self, Manifest};
use crate::{formats, CliError, Result};

#[derive(Clone, Debug, Default)]
pub struct CompareArgs {
    pub runs: Vec<String>,
    pub out: Option<String>,
}

fn ar_mean(dir: &Path) -> Option<f64> {
    for name in ["ar_report.json", "rm_ar_report.json"] {
        if let Ok(report) = formats::read_json::<ARReportFile>(&dir.join(name)) {
            if !report.ar_rm_sc.is_empty() {
                return Some(report.ar_rm_sc.iter().sum::<f64>() / report.ar_rm_sc.len() as f64);
            }
        }
    }
    None
}

pub fn run(args: &CompareArgs) -> Result<PathBuf> {
    if args.runs.is_empty() {
        return Err(CliError::Config("compare needs at least one run directory".to_string()));
    }
    let out = args
        .out
        .clone()
        .ok_or_else(|| CliError::Config("compare needs --out".to_string()))?;
    let mut rows = Vec::with_capacity(args.runs.len());
    for run in &args.runs {
        let dir = PathBuf::from(run);
        let summary: DecodeSummary = formats::read_json(&dir.join("summary.json"))
            .map_err(|e| CliError::Data(format!("{run}: {e}")))?;
        let manifest = rundir::read_manifest(&dir)
            .map_err(|e| CliError::Data(format!("{run}: {e}")))?;
        rows.push(CompareRow {
            run_dir: run.clone(),
            method: summary.method,
            seed: manifest.seed,
            mean_reward: summary.mean_reward,
            std_reward: summary.std_reward,
            mean_diversity: summary.mean_diversity,
            ar_rm_sc_mean: ar_mean(&dir),
            runtime_ms: rundir::read_timing(&dir).map(|t| t.runtime_ms),
        });
    }
    let report = ComparisonReport {
        format_version: FORMAT_VERSION,
        version: env!("CARGO_PKG_VERSION").to_string(),
        rows,
    };
    let dir = rundir::prepare(Path::new(&out))?;
    save_comparison(&dir, &report)?;
    let mut manifest = Manifest::new("compare", None, serde_json::json!({ "runs": args.runs }));
    manifest.output("report.json");
    manifest.output("report.csv");
    rundir::write_manifest(&dir, &manifest)?;
    Ok(dir)
}
