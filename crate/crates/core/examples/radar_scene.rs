//! 21 corner reflectors through the full imaging chain.
//!
//! `cargo run --release -p sparsebayes --example radar_scene -- [sigma] [seed] [p]`
//!
//! The receive array is coprime `(p, 17 - p)`.

use sparsebayes::model::{build_fourier_dictionary, make_coprime_array};
use sparsebayes::radar::{
    angle_recover, corner_reflectors, range_transform, score_image, select_range_bins, simulate_adc, BinScaling,
    RadarParams, DEFAULT_A0,
};
use sparsebayes::solvers::CondMode;
use sparsebayes::{SolverConfig, SolverKind};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let sigma: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.03);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let p: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(4);
    let params = RadarParams::automotive();
    let geometry = make_coprime_array(p, 17 - p, params.n_grid).unwrap();
    let dict = build_fourier_dictionary(&geometry);
    let scene = corner_reflectors(DEFAULT_A0);
    let spectrum = range_transform(&simulate_adc(&scene, &params, &geometry, sigma, seed).unwrap());
    let bins = select_range_bins(&spectrum, 15.0);
    println!("elements {:?}, range bins {bins:?}", geometry.indices());
    let mut config =
        SolverConfig { init_sigma_n: 0.01, use_woodbury: true, cond_mode: CondMode::Estimate, ..SolverConfig::cpa() };
    for kind in SolverKind::ALL {
        config.omp_max_atoms = if kind == SolverKind::Omp { 8 } else { 15 };
        let t = std::time::Instant::now();
        let img = angle_recover(&spectrum, &bins, kind, &dict, &config, &params, BinScaling::UnitRms).unwrap();
        let score = score_image(&img, &scene, &params, -30.0, 1);
        println!(
            "{kind:5} detected {:2} missed {:?} spurious {:3} ({:?})",
            score.detected,
            score.missed,
            score.spurious.len(),
            t.elapsed()
        );
    }
}
