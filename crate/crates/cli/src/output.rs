//! Files of one run, all named `<command>-<hash>…`:
//!
//! * `<stem>.json`: the summary (schema in `docs/summary.schema.json`),
//!   byte-identical for identical configurations;
//! * `<stem>.run.json`: wall-clock start, elapsed time and thread count;
//! * `<stem>.toml`: the experiment document, reusable with `--config`;
//! * `<stem>-*.csv`: the data.
//!
//! The summary is written last, so a CSV without its summary is the remnant
//! of an interrupted run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::{mode_name, ExperimentConfig, Resolved};
use crate::error::CliError;
use crate::run::{Check, Outcome};

pub const SCHEMA: &str = "flatchain-summary/1";

#[derive(Serialize)]
pub struct RunInfo {
    pub started_unix: u64,
    pub elapsed_seconds: f64,
    pub threads: usize,
    pub version: &'static str,
}

#[derive(Serialize)]
struct Summary<'a> {
    schema: &'static str,
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<&'static str>,
    config_hash: String,
    config: &'a Resolved,
    passed: bool,
    checks: &'a [Check],
    result: &'a Value,
    artifacts: Vec<String>,
    run_info: String,
}

pub fn write(dir: &Path, doc: &ExperimentConfig, cfg: &Resolved, outcome: &Outcome, info: &RunInfo) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let stem = cfg.stem();
    let mut artifacts = Vec::new();
    for a in &outcome.artifacts {
        let name = format!("{stem}{}", a.suffix);
        fs::write(dir.join(&name), &a.bytes)?;
        artifacts.push(name);
    }
    fs::write(dir.join(format!("{stem}.toml")), doc.to_toml())?;
    let run_info = format!("{stem}.run.json");
    fs::write(dir.join(&run_info), serde_json::to_vec_pretty(info)?)?;

    let summary = Summary {
        schema: SCHEMA,
        command: cfg.command.name(),
        mode: cfg.spectral_mode.map(mode_name),
        config_hash: cfg.hash(),
        config: cfg,
        passed: outcome.checks.iter().all(|c| c.passed),
        checks: &outcome.checks,
        result: &outcome.result,
        artifacts,
        run_info,
    };
    let file = dir.join(format!("{stem}.json"));
    let mut bytes = serde_json::to_vec_pretty(&summary)?;
    bytes.push(b'\n');
    fs::write(&file, bytes)?;
    Ok(file)
}
