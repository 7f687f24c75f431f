//! Command-line driver: configuration files, experiment presets and run outputs.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::Path;
use std::time::Instant;

pub use config::{parse_config, Config, ConfigError, Experiment};
pub use experiments::{Check, RunResult};
pub use output::Manifest;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] dskg_core::Error),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Loads `path` for `experiment`, or the built-in preset when no path is given.
pub fn load_config(experiment: Experiment, path: Option<&Path>) -> Result<Config, RunError> {
    match path {
        Some(p) => Ok(parse_config(&std::fs::read_to_string(p)?, Some(experiment))?),
        None => {
            let mut cfg = Config::defaults(experiment);
            cfg.validate()?;
            Ok(cfg)
        }
    }
}

/// Runs the experiment and writes its outputs into `dir`.
pub fn execute(cfg: &Config, dir: &Path) -> Result<Manifest, RunError> {
    let start = Instant::now();
    let res = experiments::run(cfg)?;
    output::write_outputs(dir, cfg, &res, start.elapsed().as_secs_f64())
}
