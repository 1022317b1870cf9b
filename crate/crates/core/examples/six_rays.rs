//! Runs all four solvers on the six-ray scene and prints a short summary.
//!
//! `cargo run --release -p sparsebayes --example six_rays -- [spa|cpa] [sigma] [seed]`

use sparsebayes::model::{
    build_fourier_dictionary, make_coprime_array, make_sparse_array, synth_ray_signal, six_rays_on_grid,
};
use sparsebayes::{SolverConfig, SolverKind};

const TRUE_BINS: [usize; 6] = [31, 36, 80, 85, 105, 119];

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind = args.get(1).map(String::as_str).unwrap_or("spa");
    let sigma: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.1);
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(7);
    let n = 256;
    let (geometry, config) = match kind {
        "cpa" => (make_coprime_array(8, 9, n).unwrap(), SolverConfig::cpa()),
        _ => (make_sparse_array(n, 80, seed).unwrap(), SolverConfig::spa()),
    };
    let dict = build_fourier_dictionary(&geometry);
    let meas = synth_ray_signal(&six_rays_on_grid(n), &geometry, sigma, seed.wrapping_add(1)).unwrap();
    for method in SolverKind::ALL {
        let t = std::time::Instant::now();
        let res = method.solve(&meas.y, &dict, &config).unwrap();
        let mags = res.magnitudes();
        let max = mags.iter().cloned().fold(0.0, f64::max);
        let off = (0..mags.len()).filter(|i| !TRUE_BINS.contains(i)).map(|i| mags[i]).fold(0.0, f64::max);
        println!(
            "{method:5} iters {:2} {:?} support {:?} off-support {:.1} dB ({:?})",
            res.iterations(),
            res.termination,
            res.support,
            20.0 * (off / max).log10(),
            t.elapsed()
        );
        let fmt = |v: &[f64], p: usize| v.iter().map(|s| format!("{s:.p$e}")).collect::<Vec<_>>().join(" ");
        println!("      sigma {}", fmt(&res.trace.sigma_n_est, 2));
        println!("      cond  {}", fmt(&res.trace.cond_h, 1));
    }
}
