//! Config-driven experiment runner around the `sparsebayes` solvers.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::json;

use config::{ExperimentConfig, Format};
use error::{config_err, CliResult};
use experiments::Report;
use output::{json_artifact, write_atomic};

/// What a finished run wrote.
#[derive(Debug)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// Runs the experiment and writes every artifact whose format is in
/// `formats` under `dir`. `result.json` is written when JSON is requested.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path, formats: &[Format]) -> CliResult<RunOutcome> {
    let start = Instant::now();
    let Report { artifacts, summary, results } = experiments::run(cfg)?;
    let wall = start.elapsed().as_secs_f64();
    let mut files = Vec::new();
    for a in artifacts.iter().filter(|a| formats.contains(&a.format)) {
        files.push(write_atomic(dir, a)?);
    }
    if formats.contains(&Format::Json) {
        let finished = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let doc = json!({
            "meta": {
                "experiment": cfg.experiment.name(),
                "version": env!("CARGO_PKG_VERSION"),
                "git_commit": git_commit(),
                "wall_time_s": wall,
                "finished_unix": finished,
                "config": serde_json::to_value(cfg).map_err(config_err)?,
            },
            "summary": summary,
            "results": results,
        });
        files.push(write_atomic(dir, &json_artifact("result.json", &doc)?)?);
    }
    Ok(RunOutcome { files, summary })
}

fn git_commit() -> Option<String> {
    let out = std::process::Command::new("git").args(["rev-parse", "HEAD"]).output().ok()?;
    out.status.success().then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
}
