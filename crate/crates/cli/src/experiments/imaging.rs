use serde::Serialize;
use serde_json::json;
use sparsebayes::analysis::find_peaks;
use sparsebayes::model::{build_fourier_dictionary, make_coprime_array, synth_ray_signal};
use sparsebayes::radar::{
    angle_recover, corner_reflectors, range_transform, score_image, select_range_bins, simulate_adc, street_scene,
    ImageScore, RadarParams, RangeAzimuthImage,
};
use sparsebayes::{rng, Ray, SolveResult, SolverKind};

use super::{relative_db, Report};
use crate::config::{ExperimentConfig, ResolutionCase, SceneChoice};
use crate::error::{config_err, numerical, CliError, CliResult};
use crate::output::{csv_artifact, num, pgm_artifact};

/// Peaks within this many dB of the maximum count.
pub const PEAK_FLOOR_DB: f64 = -20.0;
/// Allowed distance between a peak and the true bin.
pub const PEAK_TOL_BINS: usize = 2;

/// Solves one two-ray case with every configured method.
pub fn resolution_case(cfg: &ExperimentConfig, case: ResolutionCase) -> CliResult<Vec<SolveResult>> {
    let r = &cfg.resolution;
    let geometry = make_coprime_array(r.coprime[0], r.coprime[1], r.n_grid)
        .map_err(|e| CliError::Config(format!("resolution: {e}")))?;
    let dict = build_fourier_dictionary(&geometry);
    let rays: Vec<Ray> =
        case.rays().iter().map(|&(b, a, ph)| Ray::new(b as f64 / r.n_grid as f64, a, ph)).collect();
    let meas = synth_ray_signal(&rays, &geometry, r.noise_sigma, cfg.seed).map_err(config_err)?;
    let solver = cfg.solver_config()?;
    cfg.solver
        .methods
        .iter()
        .map(|&k| k.solve(&meas.y, &dict, &solver).map_err(numerical(format!("{k} on case {}", case.name()))))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolutionVerdict {
    pub method: SolverKind,
    /// All local maxima within [`PEAK_FLOOR_DB`] of the peak.
    pub peaks: Vec<usize>,
    /// Peaks between the two rays, widened by 5 bins either side.
    pub peaks_in_window: Vec<usize>,
    /// Both rays matched by distinct peaks within [`PEAK_TOL_BINS`].
    pub resolved: bool,
}

pub fn resolution_verdict(case: ResolutionCase, res: &SolveResult) -> ResolutionVerdict {
    let [(b1, ..), (b2, ..)] = case.rays();
    let peaks = find_peaks(&res.magnitudes(), PEAK_FLOOR_DB);
    let lo = b1.saturating_sub(5);
    let hi = b2 + 5;
    let peaks_in_window: Vec<usize> = peaks.iter().copied().filter(|p| (lo..=hi).contains(p)).collect();
    let near = |b: usize| peaks.iter().copied().filter(move |p| p.abs_diff(b) <= PEAK_TOL_BINS);
    let resolved = near(b1).any(|p1| near(b2).any(|p2| p2 != p1));
    ResolutionVerdict { method: res.method, peaks, peaks_in_window, resolved }
}

pub(super) fn run_resolution(cfg: &ExperimentConfig) -> CliResult<Report> {
    let mut report = Report::default();
    let mut cases = Vec::new();
    for &case in &cfg.resolution.cases {
        let results = resolution_case(cfg, case)?;
        let dbs: Vec<Vec<f64>> = results.iter().map(|r| relative_db(&r.magnitudes())).collect();
        let mut header = vec!["bin".to_string()];
        header.extend(results.iter().map(|r| format!("{}_db", r.method)));
        let rows = (0..cfg.resolution.n_grid)
            .map(|k| std::iter::once(k.to_string()).chain(dbs.iter().map(|d| num(d[k]))).collect())
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        report.artifacts.push(csv_artifact(format!("resolution_{}.csv", case.name()), &header, rows)?);
        let verdicts: Vec<ResolutionVerdict> = results.iter().map(|r| resolution_verdict(case, r)).collect();
        let parts: Vec<String> = verdicts
            .iter()
            .map(|v| format!("{} {:?}{}", v.method, v.peaks_in_window, if v.resolved { " resolved" } else { "" }))
            .collect();
        report.summary.push(format!("resolution {}: {}", case.name(), parts.join(", ")));
        cases.push(json!({ "case": case, "rays": case.rays(), "verdicts": verdicts }));
    }
    report.results = json!({ "geometry_coprime": cfg.resolution.coprime, "cases": cases });
    Ok(report)
}

pub struct RadarRun {
    pub image: RangeAzimuthImage,
    pub score: ImageScore,
}

/// Simulates the configured scene once with `seed` and images it with every
/// configured method. Returns the processed range bins and one run per
/// method.
pub fn radar_trial(cfg: &ExperimentConfig, seed: u64) -> CliResult<(Vec<usize>, Vec<RadarRun>)> {
    let r = &cfg.radar;
    let params = RadarParams::automotive();
    let geometry = make_coprime_array(r.coprime[0], r.coprime[1], params.n_grid)
        .map_err(|e| CliError::Config(format!("radar: {e}")))?;
    let dict = build_fourier_dictionary(&geometry);
    let scene = match r.scene {
        SceneChoice::CornerReflectors => corner_reflectors(r.a0),
        SceneChoice::Street => street_scene(r.a0),
    };
    let adc = simulate_adc(&scene, &params, &geometry, r.noise_sigma, seed).map_err(config_err)?;
    let spectrum = range_transform(&adc);
    let bins = select_range_bins(&spectrum, r.range_threshold_db);
    let base = cfg.solver_config()?;
    let mut runs = Vec::new();
    for &kind in &cfg.solver.methods {
        let mut solver = base.clone();
        if kind == SolverKind::Omp {
            solver.omp_max_atoms = r.omp_max_atoms;
        }
        let image = angle_recover(&spectrum, &bins, kind, &dict, &solver, &params, r.scaling)
            .map_err(numerical(format!("{kind} imaging")))?;
        for (p, why) in &image.flagged_rows {
            log::warn!("{kind}: range bin {p} failed: {why}");
        }
        let score = score_image(&image, &scene, &params, r.detect_floor_db, r.tol_cells);
        runs.push(RadarRun { image, score });
    }
    Ok((bins, runs))
}

pub(super) fn run_radar(cfg: &ExperimentConfig) -> CliResult<Report> {
    let mut report = Report::default();
    let mut score_rows = Vec::new();
    let mut trials = Vec::new();
    for t in 0..cfg.trials {
        let seed = rng::derive(cfg.seed, t as u64);
        let (bins, runs) = radar_trial(cfg, seed)?;
        if t == 0 {
            for run in &runs {
                report.artifacts.extend(image_artifacts(&run.image)?);
            }
        }
        let mut parts = Vec::new();
        let mut scores = Vec::new();
        for run in &runs {
            let (m, s) = (run.image.solver_used, &run.score);
            score_rows.push(vec![
                t.to_string(),
                m.to_string(),
                s.detected.to_string(),
                s.missed.len().to_string(),
                s.spurious.len().to_string(),
                run.image.flagged_rows.len().to_string(),
            ]);
            parts.push(format!("{m} {} found / {} spurious", s.detected, s.spurious.len()));
            scores.push(json!({
                "method": m,
                "detected": s.detected,
                "missed": s.missed,
                "spurious": s.spurious.len(),
                "flagged_rows": run.image.flagged_rows,
            }));
        }
        report.summary.push(format!("radar trial {t} (bins {bins:?}): {}", parts.join(", ")));
        trials.push(json!({ "trial": t, "seed": seed, "range_bins": bins, "scores": scores }));
    }
    report.artifacts.push(csv_artifact(
        "scores.csv",
        &["trial", "method", "detected", "missed", "spurious", "flagged_rows"],
        score_rows,
    )?);
    report.results = json!({ "params": RadarParams::automotive(), "trials": trials });
    Ok(report)
}

fn image_artifacts(img: &RangeAzimuthImage) -> CliResult<Vec<crate::output::Artifact>> {
    let m = img.solver_used;
    let mags = &img.magnitudes;
    let pgm = pgm_artifact(
        format!("image_{m}.pgm"),
        mags.nrows(),
        mags.ncols(),
        |r, c| mags[(r, c)],
        -img.dynamic_range_db,
        0.0,
    );
    let mut rows = Vec::new();
    for &p in &img.rows_processed {
        for j in 0..mags.ncols() {
            rows.push(vec![
                p.to_string(),
                num(img.range_axis_m[p]),
                img.columns[j].to_string(),
                num(img.angle_axis_deg[j]),
                num(mags[(p, j)]),
            ]);
        }
    }
    let csv = csv_artifact(format!("image_{m}.csv"), &["range_bin", "range_m", "column", "angle_deg", "db"], rows)?;
    Ok(vec![pgm, csv])
}
