use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use dskg_core::snapshot;

use crate::config::Config;
use crate::experiments::{Check, RunResult};
use crate::RunError;

pub const MANIFEST: &str = "manifest.json";
pub const TIMESERIES: &str = "timeseries.csv";

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: String,
    pub seed: u64,
    pub config: String,
    pub warnings: Vec<String>,
    pub summary: std::collections::BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub all_passed: bool,
    pub files: Vec<String>,
    pub wall_time_s: f64,
}

fn snapshot_name(i: usize) -> String {
    format!("snapshot_{i:03}.dskg")
}

/// Writes the manifest, the time series and any snapshots into `dir`.
pub fn write_outputs(dir: &Path, cfg: &Config, res: &RunResult, wall_time_s: f64) -> Result<Manifest, RunError> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    if let (true, Some(table)) = (cfg.timeseries, &res.table) {
        let mut f = fs::File::create(dir.join(TIMESERIES))?;
        writeln!(f, "{}", table.header)?;
        f.write_all(table.body.as_bytes())?;
        files.push(TIMESERIES.to_string());
    }
    for (i, snap) in res.snapshots.iter().enumerate() {
        let name = snapshot_name(i);
        snapshot::save(dir.join(&name), snap)?;
        files.push(name);
    }
    let manifest = Manifest {
        tool: "dskg",
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment.to_string(),
        seed: cfg.seed,
        config: cfg.to_text(),
        warnings: cfg.warnings.clone(),
        summary: res.summary.clone(),
        checks: res.checks.clone(),
        all_passed: res.all_passed(),
        files,
        wall_time_s,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join(MANIFEST), text)?;
    Ok(manifest)
}

pub fn default_directory(cfg: &Config) -> PathBuf {
    cfg.directory
        .clone()
        .unwrap_or_else(|| PathBuf::from("dskg-runs").join(cfg.experiment.name()))
}
