//! Scenario-driven front end: JSON scenario configs, the bundled scenario
//! catalogue, analysis orchestration and CSV/JSON/SVG artefacts.

pub mod analysis;
pub mod config;
pub mod error;
pub mod output;
pub mod scenarios;

pub use analysis::{execute, threads, EigenRecord, LocusPoint, RunOutput, SpectrumRow};
pub use config::{apply_override, Analysis, Format, ScenarioConfig, SweepModel};
pub use error::{CliError, Result};
pub use output::write_outputs;
pub use scenarios::{catalogue, find};

use std::path::{Path, PathBuf};

/// Reads a config file, or a bundled scenario when `source` names one and
/// no such file exists.
pub fn load_config(source: &str, overrides: &[String]) -> Result<ScenarioConfig> {
    let text = if Path::new(source).exists() {
        std::fs::read_to_string(source).map_err(|e| CliError::Validation(format!("{source}: {e}")))?
    } else if let Some(c) = find(source) {
        c.to_json()
    } else {
        return Err(CliError::Validation(format!("{source}: no such file or bundled scenario")));
    };
    ScenarioConfig::load(&text, overrides)
}

/// Runs a scenario and writes its artefacts under `out_dir` (default: the
/// config's output directory, else `./<id>`).
pub fn run(source: &str, overrides: &[String], out_dir: Option<&Path>) -> Result<(RunOutput, Vec<PathBuf>)> {
    let cfg = load_config(source, overrides)?;
    let out = execute(&cfg)?;
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.directory.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(&cfg.id));
    let files = write_outputs(&out, &dir, &cfg.output.formats)?;
    Ok((out, files))
}
