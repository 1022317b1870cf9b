use sparsebayes::model::{build_fourier_dictionary, make_coprime_array};
use sparsebayes::radar::{
    angle_recover, range_transform, select_range_bins, simulate_adc, BinScaling, PointScatterer, RadarParams,
};
use sparsebayes::{SolverConfig, SolverKind, C64};

fn expected_bin(r: f64) -> usize {
    // beat tone 2 r alpha / c sampled at 20 MHz over 1024 points
    let f = 2.0 * r * 1e13 / 2.997_924_58e8;
    (f / 20e6 * 1024.0).round() as usize
}

#[test]
fn single_reflector_lands_at_its_range_and_angle() {
    let params = RadarParams::automotive();
    let geometry = make_coprime_array(4, 13, params.n_grid).unwrap();
    let dict = build_fourier_dictionary(&geometry);
    for (r, az) in [(65.0, 14.0), (95.0, -7.0)] {
        let scene = [PointScatterer::new(r, az, C64::new(1.0, 0.0))];
        let adc = simulate_adc(&scene, &params, &geometry, 0.0, 0).unwrap();
        let spectrum = range_transform(&adc);
        let bins = select_range_bins(&spectrum, 15.0);
        assert!(bins.iter().any(|&p| p.abs_diff(expected_bin(r)) <= 1), "{bins:?} vs {}", expected_bin(r));
        let mut cfg = SolverConfig::cpa();
        cfg.omp_max_atoms = 4;
        let img = angle_recover(&spectrum, &bins, SolverKind::Omp, &dict, &cfg, &params, BinScaling::UnitRms).unwrap();
        assert!(img.flagged_rows.is_empty());
        let (mut best, mut at) = (f64::NEG_INFINITY, (0, 0));
        for &p in &img.rows_processed {
            for j in 0..img.magnitudes.ncols() {
                if img.magnitudes[(p, j)] > best {
                    best = img.magnitudes[(p, j)];
                    at = (p, j);
                }
            }
        }
        assert!((img.range_axis_m[at.0] - r).abs() < 0.5, "range {}", img.range_axis_m[at.0]);
        assert!((img.angle_axis_deg[at.1] - az).abs() < 1.0, "angle {}", img.angle_axis_deg[at.1]);
    }
}
