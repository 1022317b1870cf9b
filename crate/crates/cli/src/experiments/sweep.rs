use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use sparsebayes::analysis::normalized_mse;
use sparsebayes::model::{build_fourier_dictionary, rays_to_spectrum, synth_ray_signal};
use sparsebayes::{rng, SolverConfig, SolverKind};

use super::{model_geometry, random_rays, trial_seed, Report};
use crate::config::ExperimentConfig;
use crate::error::{config_err, numerical, CliResult};
use crate::output::{csv_artifact, num};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    NoiseSigma,
    KRays,
    MElements,
}

impl Axis {
    fn column(self) -> &'static str {
        match self {
            Axis::NoiseSigma => "sigma",
            Axis::KRays => "k",
            Axis::MElements => "m",
        }
    }
}

pub fn default_values(axis: Axis) -> Vec<f64> {
    match axis {
        Axis::NoiseSigma => vec![0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0],
        Axis::KRays => (1..=12).map(f64::from).collect(),
        Axis::MElements => vec![32.0, 64.0, 96.0, 128.0, 160.0, 192.0],
    }
}

/// Aggregate over the trials of one method at one sweep value.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub method: SolverKind,
    pub mean_mse_db: f64,
    pub stderr_mse_db: f64,
    /// Mean of the final noise estimate.
    pub mean_sigma_n: f64,
    pub stderr_sigma_n: f64,
    pub trials: usize,
}

/// `(mse_db, final sigma_n)` per method, in `methods` order.
type TrialOutcome = Vec<(f64, f64)>;

fn run_trial(
    cfg: &ExperimentConfig,
    solver: &SolverConfig,
    axis: Axis,
    value: f64,
    seed: u64,
) -> CliResult<TrialOutcome> {
    let model = &cfg.model;
    let (mut m, mut k, mut sigma) = (model.m, model.k_rays, model.noise_sigma);
    match axis {
        Axis::NoiseSigma => sigma = value,
        Axis::KRays => k = value as usize,
        Axis::MElements => m = value as usize,
    }
    let geometry = model_geometry(model, m, rng::derive(seed, 1))?;
    let dict = build_fourier_dictionary(&geometry);
    let rays = random_rays(model.n_grid, k, model.min_separation, rng::derive(seed, 2))?;
    let meas = synth_ray_signal(&rays, &geometry, sigma, rng::derive(seed, 3)).map_err(config_err)?;
    let truth = rays_to_spectrum(&rays, model.n_grid);
    cfg.solver
        .methods
        .iter()
        .map(|&kind| {
            let what = || format!("{kind} at {}={value}, seed {seed}", axis.column());
            let res = kind.solve(&meas.y, &dict, solver).map_err(numerical(what()))?;
            let mse = normalized_mse(&truth, &res.c_hat).map_err(numerical(what()))?;
            Ok((mse, res.final_sigma_n().unwrap_or(f64::NAN)))
        })
        .collect()
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs every method on `trials` fresh scenes per value. Trials run on the
/// rayon pool; results are gathered by index so the aggregate does not
/// depend on scheduling.
pub fn sweep(cfg: &ExperimentConfig, axis: Axis, values: &[f64]) -> CliResult<(Vec<SweepRow>, Vec<String>)> {
    let solver = cfg.solver_config()?;
    let jobs: Vec<(usize, usize)> =
        (0..values.len()).flat_map(|v| (0..cfg.trials).map(move |t| (v, t))).collect();
    let outcomes: Vec<CliResult<TrialOutcome>> = jobs
        .par_iter()
        .map(|&(v, t)| run_trial(cfg, &solver, axis, values[v], trial_seed(cfg.seed, v, t)))
        .collect();
    let mut per_value: Vec<Vec<TrialOutcome>> = vec![Vec::new(); values.len()];
    let mut lines = Vec::with_capacity(jobs.len());
    for (&(v, t), out) in jobs.iter().zip(outcomes) {
        let out = out?;
        let parts: Vec<String> = cfg
            .solver
            .methods
            .iter()
            .zip(&out)
            .map(|(k, (mse, s))| format!("{k} {mse:.2} dB (sigma {s:.3})"))
            .collect();
        lines.push(format!("{}={} trial {t}: {}", axis.column(), values[v], parts.join(", ")));
        per_value[v].push(out);
    }
    let mut rows = Vec::new();
    for (v, outs) in per_value.iter().enumerate() {
        for (j, &method) in cfg.solver.methods.iter().enumerate() {
            let mse: Vec<f64> = outs.iter().map(|o| o[j].0).collect();
            let sig: Vec<f64> = outs.iter().map(|o| o[j].1).collect();
            let (mean_mse_db, stderr_mse_db) = mean_stderr(&mse);
            let (mean_sigma_n, stderr_sigma_n) = mean_stderr(&sig);
            rows.push(SweepRow {
                value: values[v],
                method,
                mean_mse_db,
                stderr_mse_db,
                mean_sigma_n,
                stderr_sigma_n,
                trials: outs.len(),
            });
        }
    }
    Ok((rows, lines))
}

pub(super) fn run(cfg: &ExperimentConfig, axis: Axis) -> CliResult<Report> {
    let values = cfg.sweep.values.clone().unwrap_or_else(|| default_values(axis));
    let (rows, summary) = sweep(cfg, axis, &values)?;
    let col = axis.column();
    let mse_rows = rows
        .iter()
        .map(|r| vec![num(r.value), r.method.to_string(), num(r.mean_mse_db), num(r.stderr_mse_db)])
        .collect();
    let mut artifacts =
        vec![csv_artifact(format!("mse_vs_{col}.csv"), &[col, "method", "mean_mse_db", "stderr"], mse_rows)?];
    if axis == Axis::NoiseSigma {
        let sig_rows = rows
            .iter()
            .map(|r| vec![num(r.value), r.method.to_string(), num(r.mean_sigma_n), num(r.stderr_sigma_n)])
            .collect();
        artifacts.push(csv_artifact(
            "sigma_est_vs_sigma.csv",
            &[col, "method", "mean_sigma_est", "stderr"],
            sig_rows,
        )?);
    }
    Ok(Report { artifacts, summary, results: json!({ "axis": axis, "values": values, "rows": rows }) })
}
