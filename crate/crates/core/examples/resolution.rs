//! Two close rays on a 16-element coprime array with a 1000-point grid.
//!
//! `cargo run --release -p sparsebayes --example resolution -- [p] [sigma] [seed] [second_bin] [second_amp]`
//!
//! The array is coprime `(p, 17 - p)`.

use sparsebayes::model::{build_fourier_dictionary, make_coprime_array, synth_ray_signal, Ray};
use sparsebayes::solvers::CondMode;
use sparsebayes::{SolverConfig, SolverKind};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let arg = |i: usize, d: f64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let p = arg(1, 4.0) as usize;
    let sigma = arg(2, 0.01);
    let seed = arg(3, 1.0) as u64;
    let second = arg(4, 505.0);
    let amp2 = arg(5, 1.0);
    let n = 1000;
    let geometry = make_coprime_array(p, 17 - p, n).unwrap();
    let dict = build_fourier_dictionary(&geometry);
    let rays = [Ray::new(0.5, 1.0, 0.3), Ray::new(second / n as f64, amp2, 2.1)];
    let meas = synth_ray_signal(&rays, &geometry, sigma, seed).unwrap();
    let config = SolverConfig {
        init_sigma_n: 0.01,
        use_woodbury: true,
        cond_mode: CondMode::Estimate,
        ..SolverConfig::cpa()
    };
    for method in SolverKind::ALL {
        let res = method.solve(&meas.y, &dict, &config).unwrap();
        let mags = res.magnitudes();
        let max = mags.iter().cloned().fold(0.0, f64::max);
        let peaks: Vec<usize> = (1..n - 1)
            .filter(|&k| mags[k] > max * 0.1 && mags[k] > mags[k - 1] && mags[k] >= mags[k + 1])
            .collect();
        let window: Vec<String> =
            (490..=515).map(|k| format!("{:.0}", (20.0 * (mags[k] / max).log10()).max(-99.0))).collect();
        println!("{method:5} peaks above -20 dB {peaks:?}\n      {}", window.join(" "));
    }
}
