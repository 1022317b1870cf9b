//! Browser bindings. Each export takes plain numbers and strings and
//! returns a JSON document for the page to plot.

use serde_json::{json, Value};
use sparsebayes::analysis::{landscape_scan, reference_instance, LandscapeParams, Method};
use sparsebayes::model::{
    build_fourier_dictionary, make_coprime_array, make_sparse_array, rays_to_spectrum, synth_ray_signal,
    six_rays_on_grid,
};
use sparsebayes::radar::{
    angle_recover, corner_reflectors, range_transform, score_image, select_range_bins, simulate_adc, BinScaling,
    RadarParams, DEFAULT_A0,
};
use sparsebayes::{SolverConfig, SolverKind};
use wasm_bindgen::prelude::*;

fn method(name: &str) -> Result<SolverKind, String> {
    SolverKind::ALL
        .into_iter()
        .find(|k| k.name() == name)
        .ok_or_else(|| format!("unknown method `{name}`"))
}

fn db(mags: &[f64]) -> Vec<f64> {
    let max = mags.iter().copied().fold(0.0, f64::max);
    mags.iter().map(|&v| if max > 0.0 && v > 0.0 { (20.0 * (v / max).log10()).max(-120.0) } else { -120.0 }).collect()
}

/// Six-ray scene on a 256-point grid, observed by an `m`-element sparse
/// array (`"spa"`) or the 16-element coprime array (`"coprime"`).
pub fn recover_spectrum_json(array: &str, m: usize, noise_sigma: f64, seed: u64, method_name: &str) -> Result<Value, String> {
    let n = 256;
    let (geometry, mut cfg) = match array {
        "spa" => (make_sparse_array(n, m, seed).map_err(|e| e.to_string())?, SolverConfig::spa()),
        "coprime" => (make_coprime_array(8, 9, n).map_err(|e| e.to_string())?, SolverConfig::cpa()),
        other => return Err(format!("unknown array `{other}`")),
    };
    cfg.use_woodbury = true;
    cfg.cond_mode = sparsebayes::solvers::CondMode::Estimate;
    let kind = method(method_name)?;
    let dict = build_fourier_dictionary(&geometry);
    let rays = six_rays_on_grid(n);
    let meas = synth_ray_signal(&rays, &geometry, noise_sigma, seed.wrapping_add(1)).map_err(|e| e.to_string())?;
    let res = kind.solve(&meas.y, &dict, &cfg).map_err(|e| e.to_string())?;
    let truth: Vec<f64> = rays_to_spectrum(&rays, n).iter().map(|z| z.norm()).collect();
    Ok(json!({
        "method": kind.name(),
        "elements": geometry.indices(),
        "db": db(&res.magnitudes()),
        "truth_db": db(&truth),
        "support": res.support,
        "iterations": res.iterations(),
        "termination": format!("{:?}", res.termination),
        "residue_db": res.trace.residue_db,
        "sigma_n": res.trace.sigma_n_est,
    }))
}

/// Penalty along the null-space line of the reference 4 x 5 problem.
/// `kind` is `lp`, `cg`, `sbl` or `blrc`; `param` is `p` or the Cauchy scale.
pub fn landscape_json(kind: &str, param: f64) -> Result<Value, String> {
    let m = match kind {
        "lp" => Method::Lp(param),
        "cg" => Method::Cg(param),
        "sbl" => Method::Sbl,
        "blrc" => Method::Blrc,
        other => return Err(format!("unknown penalty `{other}`")),
    };
    let inst = reference_instance();
    let curve = landscape_scan(&inst.a, &inst.c_op, &inst.v_grid, m, &LandscapeParams::default()).map_err(|e| e.to_string())?;
    let minima: Vec<f64> = curve.local_minima().iter().map(|&i| curve.v_grid[i]).collect();
    Ok(json!({ "label": m.label(), "v": curve.v_grid, "penalty": curve.penalty, "minima": minima }))
}

/// Range-azimuth image of the 21 corner reflectors seen by a coprime
/// `(p, q)` receive array. Only the processed range rows are returned.
pub fn radar_image_json(method_name: &str, p: usize, q: usize, noise_sigma: f64, seed: u64) -> Result<Value, String> {
    let kind = method(method_name)?;
    let params = RadarParams::automotive();
    let geometry = make_coprime_array(p, q, params.n_grid).map_err(|e| e.to_string())?;
    let dict = build_fourier_dictionary(&geometry);
    let scene = corner_reflectors(DEFAULT_A0);
    let adc = simulate_adc(&scene, &params, &geometry, noise_sigma, seed).map_err(|e| e.to_string())?;
    let spectrum = range_transform(&adc);
    let bins = select_range_bins(&spectrum, 15.0);
    let mut cfg = SolverConfig { init_sigma_n: 0.01, use_woodbury: true, ..SolverConfig::cpa() };
    cfg.cond_mode = sparsebayes::solvers::CondMode::Estimate;
    if kind == SolverKind::Omp {
        cfg.omp_max_atoms = 8;
    }
    let img = angle_recover(&spectrum, &bins, kind, &dict, &cfg, &params, BinScaling::UnitRms).map_err(|e| e.to_string())?;
    let score = score_image(&img, &scene, &params, -30.0, 1);
    let rows: Vec<Vec<f64>> =
        bins.iter().map(|&r| (0..img.magnitudes.ncols()).map(|j| img.magnitudes[(r, j)]).collect()).collect();
    Ok(json!({
        "method": kind.name(),
        "range_m": bins.iter().map(|&r| img.range_axis_m[r]).collect::<Vec<_>>(),
        "angle_deg": img.angle_axis_deg,
        "rows": rows,
        "floor_db": -img.dynamic_range_db,
        "detected": score.detected,
        "spurious": score.spurious.len(),
    }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn recover_spectrum(array: &str, m: usize, noise_sigma: f64, seed: u32, method: &str) -> Result<String, JsValue> {
    to_js(recover_spectrum_json(array, m, noise_sigma, seed.into(), method))
}

#[wasm_bindgen]
pub fn landscape(kind: &str, param: f64) -> Result<String, JsValue> {
    to_js(landscape_json(kind, param))
}

#[wasm_bindgen]
pub fn radar_image(method: &str, p: usize, q: usize, noise_sigma: f64, seed: u32) -> Result<String, JsValue> {
    to_js(radar_image_json(method, p, q, noise_sigma, seed.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_has_grid_length() {
        let v = recover_spectrum_json("spa", 80, 0.1, 7, "omp").unwrap();
        assert_eq!(v["db"].as_array().unwrap().len(), 256);
        assert!(recover_spectrum_json("ula", 80, 0.1, 7, "omp").is_err());
        assert!(recover_spectrum_json("spa", 80, 0.1, 7, "lasso").is_err());
    }

    #[test]
    fn landscape_normalized() {
        let v = landscape_json("lp", 0.5).unwrap();
        let pen = v["penalty"].as_array().unwrap();
        let vs = v["v"].as_array().unwrap();
        let zero = (0..vs.len()).min_by(|&i, &j| vs[i].as_f64().unwrap().abs().total_cmp(&vs[j].as_f64().unwrap().abs())).unwrap();
        assert!((pen[zero].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn radar_rows_match_bins() {
        let v = radar_image_json("omp", 4, 13, 0.03, 1).unwrap();
        assert_eq!(v["rows"].as_array().unwrap().len(), v["range_m"].as_array().unwrap().len());
    }
}
