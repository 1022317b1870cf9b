//! One runner per experiment kind. Runners only compute; writing files is
//! left to the caller so tests can inspect results directly.

mod imaging;
mod sweep;

pub use imaging::{radar_trial, resolution_case, resolution_verdict, RadarRun, ResolutionVerdict};
pub use sweep::{default_values, sweep, Axis, SweepRow};

use rand::Rng;
use serde_json::json;
use sparsebayes::analysis::{landscape_scan, reference_instance, MetricReport};
use sparsebayes::model::{
    build_fourier_dictionary, make_coprime_array, make_sparse_array, rays_to_spectrum, synth_ray_signal,
    six_rays_on_grid, ArrayGeometry,
};
use sparsebayes::{rng, Ray, SolveResult};

use crate::config::{ArrayChoice, Experiment, ExperimentConfig, ModelConfig, RaySource};
use crate::error::{config_err, numerical, CliError, CliResult};
use crate::output::{csv_artifact, num, Artifact};

/// Everything an experiment produced.
#[derive(Debug, Default)]
pub struct Report {
    pub artifacts: Vec<Artifact>,
    /// One line per trial, in trial order.
    pub summary: Vec<String>,
    /// Experiment-specific results for `result.json`.
    pub results: serde_json::Value,
}

pub fn run(cfg: &ExperimentConfig) -> CliResult<Report> {
    match cfg.experiment {
        Experiment::Synth => run_synth(cfg),
        Experiment::Solve => run_solve(cfg),
        Experiment::SweepNoise => sweep::run(cfg, Axis::NoiseSigma),
        Experiment::SweepK => sweep::run(cfg, Axis::KRays),
        Experiment::SweepM => sweep::run(cfg, Axis::MElements),
        Experiment::Landscape => run_landscape(cfg),
        Experiment::Resolution => imaging::run_resolution(cfg),
        Experiment::Radar => imaging::run_radar(cfg),
    }
}

/// Seed for one trial of one sweep point.
pub fn trial_seed(base: u64, value_index: usize, trial: usize) -> u64 {
    rng::derive(rng::derive(base, value_index as u64), trial as u64)
}

pub(crate) fn model_geometry(model: &ModelConfig, m: usize, array_seed: u64) -> CliResult<ArrayGeometry> {
    match model.array {
        ArrayChoice::Spa => make_sparse_array(model.n_grid, m, array_seed),
        ArrayChoice::Coprime => make_coprime_array(model.coprime[0], model.coprime[1], model.n_grid),
        ArrayChoice::Full => ArrayGeometry::full(model.n_grid),
    }
    .map_err(|e| CliError::Config(format!("model: {e}")))
}

/// `k` on-grid rays at least `min_sep` bins apart (circularly), amplitudes
/// uniform on `[0.5, 1]`, phases uniform on `[0, 2 pi)`.
pub fn random_rays(n_grid: usize, k: usize, min_sep: usize, seed: u64) -> CliResult<Vec<Ray>> {
    let mut r = rng::seeded(seed);
    let mut bins: Vec<usize> = Vec::with_capacity(k);
    let mut attempts = 0;
    while bins.len() < k {
        attempts += 1;
        if attempts > 100_000 {
            return Err(CliError::Config(format!(
                "cannot place {k} rays {min_sep} bins apart on a {n_grid}-point grid"
            )));
        }
        let b = r.random_range(0..n_grid);
        let clear = bins.iter().all(|&o| {
            let d = b.abs_diff(o);
            d.min(n_grid - d) >= min_sep
        });
        if clear {
            bins.push(b);
        }
    }
    Ok(bins
        .into_iter()
        .map(|b| Ray::new(b as f64 / n_grid as f64, r.random_range(0.5..=1.0), r.random_range(0.0..std::f64::consts::TAU)))
        .collect())
}

fn scene_rays(model: &ModelConfig, seed: u64) -> CliResult<Vec<Ray>> {
    match model.rays {
        RaySource::SixRays => Ok(six_rays_on_grid(model.n_grid)),
        RaySource::Random => random_rays(model.n_grid, model.k_rays, model.min_separation, rng::derive(seed, 2)),
    }
}

fn rays_json(rays: &[Ray]) -> serde_json::Value {
    rays.iter().map(|r| json!({ "freq": r.freq, "amp": r.amp, "phase": r.phase })).collect()
}

fn run_synth(cfg: &ExperimentConfig) -> CliResult<Report> {
    let m = &cfg.model;
    let geometry = model_geometry(m, m.m, m.array_seed.unwrap_or(cfg.seed))?;
    let rays = scene_rays(m, cfg.seed)?;
    let meas = synth_ray_signal(&rays, &geometry, m.noise_sigma, cfg.seed.wrapping_add(1)).map_err(config_err)?;
    let truth = rays_to_spectrum(&rays, m.n_grid);
    let y_rows = geometry
        .indices()
        .iter()
        .zip(meas.y.iter())
        .enumerate()
        .map(|(r, (&i, z))| vec![r.to_string(), i.to_string(), num(z.re), num(z.im)])
        .collect();
    let t_rows = truth
        .iter()
        .enumerate()
        .map(|(k, z)| vec![k.to_string(), num(z.re), num(z.im), num(z.norm())])
        .collect();
    Ok(Report {
        artifacts: vec![
            csv_artifact("measurement.csv", &["element", "index", "re", "im"], y_rows)?,
            csv_artifact("truth.csv", &["bin", "re", "im", "magnitude"], t_rows)?,
        ],
        summary: vec![format!(
            "synth: {} elements, {} rays, noise sigma {}",
            geometry.len(),
            rays.len(),
            m.noise_sigma
        )],
        results: json!({ "geometry": geometry.indices(), "rays": rays_json(&rays) }),
    })
}

/// Magnitude in dB relative to the largest entry, floored at -300.
pub fn relative_db(mags: &[f64]) -> Vec<f64> {
    let max = mags.iter().copied().fold(0.0f64, f64::max);
    mags.iter()
        .map(|&v| if max > 0.0 && v > 0.0 { (20.0 * (v / max).log10()).max(-300.0) } else { -300.0 })
        .collect()
}

fn solve_artifacts(prefix: &str, res: &SolveResult, metrics: &MetricReport) -> CliResult<Vec<Artifact>> {
    let mags = res.magnitudes();
    let db = relative_db(&mags);
    let spectrum = mags
        .iter()
        .zip(&db)
        .enumerate()
        .map(|(k, (m, d))| vec![k.to_string(), num(*m), num(*d)])
        .collect();
    let t = &res.trace;
    let trace = (0..t.len())
        .map(|i| {
            vec![
                (i + 1).to_string(),
                num(t.residue_db[i]),
                num(t.sigma_n_est[i]),
                // methods without a Cauchy scale report 0
                num(t.gamma_est[i].unwrap_or(0.0)),
                num(t.cond_h[i]),
            ]
        })
        .collect();
    let metric_rows = metrics.rows().iter().map(|(k, v)| vec![k.to_string(), num(*v)]).collect();
    Ok(vec![
        csv_artifact(format!("{prefix}spectrum.csv"), &["bin", "magnitude", "db"], spectrum)?,
        csv_artifact(format!("{prefix}trace.csv"), &["iter", "residue_db", "sigma_n", "gamma", "cond_h"], trace)?,
        csv_artifact(format!("{prefix}metrics.csv"), &["metric", "value"], metric_rows)?,
    ])
}

fn run_solve(cfg: &ExperimentConfig) -> CliResult<Report> {
    let m = &cfg.model;
    let solver = cfg.solver_config()?;
    let geometry = model_geometry(m, m.m, m.array_seed.unwrap_or(cfg.seed))?;
    let dict = build_fourier_dictionary(&geometry);
    let rays = scene_rays(m, cfg.seed)?;
    let meas = synth_ray_signal(&rays, &geometry, m.noise_sigma, cfg.seed.wrapping_add(1)).map_err(config_err)?;
    let truth = rays_to_spectrum(&rays, m.n_grid);
    let mut report = Report::default();
    let mut results = serde_json::Map::new();
    let several = cfg.solver.methods.len() > 1;
    for &kind in &cfg.solver.methods {
        let res = kind.solve(&meas.y, &dict, &solver).map_err(numerical(format!("{kind} solve")))?;
        let metrics = MetricReport::evaluate(&res, &truth, &meas.y, &dict).map_err(numerical(format!("{kind} metrics")))?;
        let prefix = if several { format!("{kind}/") } else { String::new() };
        report.artifacts.extend(solve_artifacts(&prefix, &res, &metrics)?);
        report.summary.push(format!(
            "solve {kind}: {} iterations ({:?}), support {:?}, mse {:.2} dB, residue {:.2} dB",
            res.iterations(),
            res.termination,
            res.support,
            metrics.mse_db,
            metrics.residue_db
        ));
        results.insert(kind.to_string(), json!({ "result": res, "metrics": metrics }));
    }
    report.results = json!({
        "geometry": geometry.indices(),
        "rays": rays_json(&rays),
        "solver": solver,
        "methods": results,
    });
    Ok(report)
}

fn run_landscape(cfg: &ExperimentConfig) -> CliResult<Report> {
    let inst = reference_instance();
    let params = &cfg.landscape.params;
    let mut report = Report::default();
    let mut curves = Vec::new();
    for &method in &cfg.landscape.methods {
        let curve = landscape_scan(&inst.a, &inst.c_op, &inst.v_grid, method, params)
            .map_err(numerical(format!("landscape {}", method.label())))?;
        let minima: Vec<f64> = curve.local_minima().iter().map(|&i| curve.v_grid[i]).collect();
        let rows = curve.v_grid.iter().zip(&curve.penalty).map(|(v, p)| vec![num(*v), num(*p)]).collect();
        report.artifacts.push(csv_artifact(format!("landscape_{}.csv", method.label()), &["v", "penalty"], rows)?);
        report.summary.push(format!("landscape {}: {} local minima at v = {:?}", method.label(), minima.len(), minima));
        curves.push(json!({ "method": method, "local_minima_v": minima, "argmin_v": curve.v_grid[curve.argmin()] }));
    }
    let re = |v: &nalgebra::DVector<sparsebayes::C64>| v.iter().map(|z| z.re).collect::<Vec<_>>();
    report.results = json!({
        "c_op": re(&inst.c_op),
        "a_null": re(&inst.a_null),
        "params": params,
        "curves": curves,
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_rays_respect_separation() {
        for seed in 0..20 {
            let rays = random_rays(256, 12, 3, seed).unwrap();
            assert_eq!(rays.len(), 12);
            let bins: Vec<usize> = rays.iter().map(|r| r.nearest_bin(256)).collect();
            for i in 0..bins.len() {
                for j in 0..i {
                    let d = bins[i].abs_diff(bins[j]);
                    assert!(d.min(256 - d) >= 3);
                }
            }
            assert!(rays.iter().all(|r| (0.5..=1.0).contains(&r.amp)));
            assert!(rays.iter().all(|r| (0.0..std::f64::consts::TAU).contains(&r.phase)));
        }
        assert!(random_rays(10, 5, 3, 0).is_err());
    }

    #[test]
    fn trial_seeds_differ() {
        let s: std::collections::HashSet<u64> =
            (0..5).flat_map(|v| (0..20).map(move |t| trial_seed(1, v, t))).collect();
        assert_eq!(s.len(), 100);
    }
}
