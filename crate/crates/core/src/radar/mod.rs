//! FMCW point-scatterer simulation and range-azimuth imaging.
//!
//! The chain is: [`simulate_adc`] produces dechirped samples per antenna,
//! [`range_transform`] takes a column-wise FFT, [`select_range_bins`] picks the
//! range peaks and [`angle_recover`] runs a sparse solver across the array
//! at each picked bin.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{complex_noise, ArrayGeometry, Dictionary};
use crate::rng;
use crate::solvers::{SolverConfig, SolverKind};
use crate::C64;

pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarParams {
    /// Carrier frequency, Hz.
    pub fc: f64,
    /// Chirp slope, Hz/s.
    pub alpha: f64,
    /// ADC rate, Hz.
    pub fs: f64,
    pub ns: usize,
    pub wavelength: f64,
    /// Minimum element spacing, m.
    pub d: f64,
    pub n_grid: usize,
    pub c_light: f64,
}

impl RadarParams {
    /// 79 GHz, 10 MHz/us, 20 MHz ADC, 1024 samples, half-wavelength grid of 256.
    pub fn automotive() -> Self {
        let fc = 79e9;
        let wavelength = SPEED_OF_LIGHT / fc;
        Self {
            fc,
            alpha: 1e13,
            fs: 20e6,
            ns: 1024,
            wavelength,
            d: wavelength / 2.0,
            n_grid: 256,
            c_light: SPEED_OF_LIGHT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [self.fc, self.alpha, self.fs, self.wavelength, self.d, self.c_light];
        if pos.iter().any(|v| !(*v > 0.0 && v.is_finite())) || self.ns == 0 || self.n_grid == 0 {
            return invalid("radar parameters must all be positive");
        }
        let lam = self.c_light / self.fc;
        if ((self.wavelength - lam) / lam).abs() > 1e-6 {
            return invalid(format!("wavelength {} does not match c/fc = {lam}", self.wavelength));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.fs
    }

    /// Range covered by one FFT bin.
    pub fn range_bin_m(&self) -> f64 {
        self.c_light / (2.0 * self.alpha * self.ns as f64 * self.dt())
    }

    pub fn beat_frequency(&self, range_m: f64) -> f64 {
        2.0 * range_m * self.alpha / self.c_light
    }

    /// Fractional FFT bin of a target at `range_m`.
    pub fn beat_bin(&self, range_m: f64) -> f64 {
        range_m / self.range_bin_m()
    }

    /// Largest range whose beat tone stays below `fs/2`.
    pub fn max_range_m(&self) -> f64 {
        self.fs / 2.0 * self.c_light / (2.0 * self.alpha)
    }

    /// Signed grid bin of column `k` (`k - N` for the upper half).
    pub fn signed_bin(&self, k: usize) -> i64 {
        let n = self.n_grid as i64;
        let k = k as i64;
        if k >= (n + 1) / 2 {
            k - n
        } else {
            k
        }
    }

    /// `sin(theta)` of column `k`, which may fall outside [-1, 1].
    pub fn column_sine(&self, k: usize) -> f64 {
        -self.wavelength * self.signed_bin(k) as f64 / (self.d * self.n_grid as f64)
    }

    /// Fractional grid column of a plane wave from `angle_deg`.
    pub fn angle_column(&self, angle_deg: f64) -> f64 {
        let f = -self.d * angle_deg.to_radians().sin() / self.wavelength;
        f.rem_euclid(1.0) * self.n_grid as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointScatterer {
    pub range_m: f64,
    pub angle_deg: f64,
    pub amplitude: C64,
}

impl PointScatterer {
    pub fn new(range_m: f64, angle_deg: f64, amplitude: C64) -> Self {
        Self { range_m, angle_deg, amplitude }
    }

    /// Real amplitude `a0 / range`.
    pub fn with_range_law(range_m: f64, angle_deg: f64, a0: f64) -> Self {
        Self::new(range_m, angle_deg, C64::new(a0 / range_m, 0.0))
    }
}

pub const FIXED_TARGET_RANGES: [f64; 3] = [65.0, 95.0, 105.0];
pub const FIXED_TARGET_ANGLES: [f64; 7] = [-21.0, -14.0, -7.0, 0.0, 7.0, 14.0, 21.0];
/// Car centres as (x, y) in metres, x across and y along boresight.
pub const CAR_POSITIONS: [(f64, f64); 5] = [(12.0, 70.0), (-4.1, 75.0), (-0.1, 80.1), (4.21, 86.0), (4.15, 74.0)];
/// Offsets of the three points standing in for a car body.
pub const CAR_CLUSTER: [(f64, f64); 3] = [(0.0, 0.0), (-0.9, -2.0), (0.9, -2.0)];
pub const DEFAULT_A0: f64 = 65.0;

/// 21 corner reflectors on the range x angle lattice.
pub fn corner_reflectors(a0: f64) -> Vec<PointScatterer> {
    FIXED_TARGET_RANGES
        .iter()
        .flat_map(|&r| FIXED_TARGET_ANGLES.iter().map(move |&a| PointScatterer::with_range_law(r, a, a0)))
        .collect()
}

/// Five cars as three-point clusters.
pub fn car_clusters(a0: f64) -> Vec<PointScatterer> {
    CAR_POSITIONS
        .iter()
        .flat_map(|&(x, y)| {
            CAR_CLUSTER.iter().map(move |&(dx, dy)| {
                let (px, py) = (x + dx, y + dy);
                PointScatterer::with_range_law(px.hypot(py), px.atan2(py).to_degrees(), a0)
            })
        })
        .collect()
}

pub fn street_scene(a0: f64) -> Vec<PointScatterer> {
    let mut s = corner_reflectors(a0);
    s.extend(car_clusters(a0));
    s
}

fn check_scene(scene: &[PointScatterer], params: &RadarParams) -> Result<()> {
    let r_max = params.max_range_m();
    for (l, s) in scene.iter().enumerate() {
        if !(s.range_m > 0.0) || !(s.angle_deg.abs() < 90.0) {
            return invalid(format!("scatterer {l}: range {} m, angle {} deg out of domain", s.range_m, s.angle_deg));
        }
        if s.range_m >= r_max {
            return invalid(format!(
                "scatterer {l} at {} m aliases: beat {:.4e} Hz is not below fs/2 (max range {r_max:.2} m)",
                s.range_m,
                params.beat_frequency(s.range_m)
            ));
        }
    }
    Ok(())
}

/// Dechirped ADC samples, `Ns x M`.
pub fn simulate_adc(
    scene: &[PointScatterer],
    params: &RadarParams,
    geometry: &ArrayGeometry,
    noise_sigma: f64,
    seed: u64,
) -> Result<DMatrix<C64>> {
    params.validate()?;
    check_scene(scene, params)?;
    if !(noise_sigma >= 0.0) {
        return invalid(format!("noise sigma {noise_sigma} is negative"));
    }
    let ns = params.ns;
    let idx = geometry.indices();
    let mut adc = DMatrix::<C64>::zeros(ns, idx.len());
    for s in scene {
        let beat = params.beat_frequency(s.range_m) * params.dt();
        let spatial = params.d * s.angle_deg.to_radians().sin() / params.wavelength;
        let carrier = (2.0 * s.range_m / params.wavelength).fract();
        for (col, &i) in idx.iter().enumerate() {
            let base = (carrier - (spatial * i as f64).fract()).fract();
            for n in 0..ns {
                let cyc = ((beat * n as f64).fract() + base).fract();
                adc[(n, col)] += s.amplitude * C64::from_polar(1.0, TAU * cyc);
            }
        }
    }
    if noise_sigma > 0.0 {
        let mut r = rng::seeded(seed);
        let e = complex_noise(ns * idx.len(), noise_sigma, &mut r);
        for (a, b) in adc.iter_mut().zip(e.iter()) {
            *a += b;
        }
    }
    Ok(adc)
}

/// Unnormalized forward DFT of every column.
pub fn range_transform(adc: &DMatrix<C64>) -> DMatrix<C64> {
    let ns = adc.nrows();
    let mut out = adc.clone();
    if ns == 0 {
        return out;
    }
    let fft = FftPlanner::new().plan_fft_forward(ns);
    for mut col in out.column_iter_mut() {
        // columns of a column-major matrix are contiguous
        fft.process(col.as_mut_slice());
    }
    out
}

/// Local maxima of the summed power `sum_i |y(p,i)|^2` within
/// `threshold_db` of the strongest bin.
pub fn select_range_bins(spectrum: &DMatrix<C64>, threshold_db: f64) -> Vec<usize> {
    let e: Vec<f64> = spectrum.row_iter().map(|r| r.iter().map(|z| z.norm_sqr()).sum()).collect();
    let max = e.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let floor = max * 10f64.powf(-threshold_db / 10.0);
    (0..e.len())
        .filter(|&p| {
            e[p] >= floor && (p == 0 || e[p] >= e[p - 1]) && (p + 1 == e.len() || e[p] >= e[p + 1])
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalPoint {
    pub range_m: f64,
    /// `None` when the column lies outside the visible region.
    pub angle_deg: Option<f64>,
}

/// Range of bin `p` and azimuth of grid column `k`.
pub fn to_physical(p: usize, k: usize, params: &RadarParams) -> PhysicalPoint {
    let s = params.column_sine(k);
    PhysicalPoint {
        range_m: p as f64 * params.range_bin_m(),
        angle_deg: (s.abs() <= 1.0).then(|| s.asin() * 180.0 / PI),
    }
}

#[derive(Debug, Clone)]
pub struct RangeAzimuthImage {
    /// `P x N_visible`, dB relative to the image maximum.
    pub magnitudes: DMatrix<f64>,
    pub range_axis_m: Vec<f64>,
    /// Increasing azimuth.
    pub angle_axis_deg: Vec<f64>,
    /// Grid column behind each image column.
    pub columns: Vec<usize>,
    pub rows_processed: Vec<usize>,
    /// Range bins whose solve failed, with the reason.
    pub flagged_rows: Vec<(usize, String)>,
    pub solver_used: SolverKind,
    pub dynamic_range_db: f64,
}

impl RangeAzimuthImage {
    /// Image column showing grid column `k`.
    pub fn column_of(&self, k: usize) -> Option<usize> {
        self.columns.iter().position(|&c| c == k)
    }
}

/// Visible grid columns ordered by increasing azimuth.
fn visible_columns(params: &RadarParams) -> Vec<(usize, f64)> {
    let mut cols: Vec<(usize, f64)> = (0..params.n_grid)
        .filter_map(|k| to_physical(0, k, params).angle_deg.map(|a| (k, a)))
        .collect();
    cols.sort_by(|a, b| a.1.total_cmp(&b.1));
    cols
}

/// How the snapshot at each range bin is scaled before solving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BinScaling {
    /// Solve on the raw FFT values.
    None,
    /// Scale each snapshot to unit RMS and undo it afterwards.
    #[default]
    UnitRms,
}

/// Runs `solver` on `y(p, .)` for every `p` in `bins` and assembles the image.
pub fn angle_recover(
    spectrum: &DMatrix<C64>,
    bins: &[usize],
    solver: SolverKind,
    dict: &Dictionary,
    config: &SolverConfig,
    params: &RadarParams,
    scaling: BinScaling,
) -> Result<RangeAzimuthImage> {
    params.validate()?;
    if spectrum.ncols() != dict.m() {
        return invalid(format!("spectrum has {} antennas, dictionary {}", spectrum.ncols(), dict.m()));
    }
    if dict.n() != params.n_grid {
        return invalid(format!("dictionary has {} columns, radar grid {}", dict.n(), params.n_grid));
    }
    if let Some(&p) = bins.iter().find(|&&p| p >= spectrum.nrows()) {
        return invalid(format!("range bin {p} beyond {} rows", spectrum.nrows()));
    }
    let solve_row = |p: usize| -> (usize, std::result::Result<DVector<f64>, String>) {
        let y: DVector<C64> = spectrum.row(p).transpose();
        let scale = match scaling {
            BinScaling::None => 1.0,
            BinScaling::UnitRms => y.norm() / (y.len() as f64).sqrt(),
        };
        if !(scale > 0.0) {
            return (p, Ok(DVector::zeros(dict.n())));
        }
        let out = solver
            .solve(&(y / C64::new(scale, 0.0)), dict, config)
            .map(|r| r.c_hat.map(|z| z.norm() * scale))
            .map_err(|e| e.to_string());
        (p, out)
    };

    #[cfg(feature = "parallel")]
    let rows: Vec<_> = {
        use rayon::prelude::*;
        bins.par_iter().map(|&p| solve_row(p)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<_> = bins.iter().map(|&p| solve_row(p)).collect();

    let cols = visible_columns(params);
    let mut lin = DMatrix::<f64>::zeros(spectrum.nrows(), cols.len());
    let mut flagged = Vec::new();
    for (p, r) in rows {
        match r {
            Ok(mag) => {
                for (j, &(k, _)) in cols.iter().enumerate() {
                    lin[(p, j)] = mag[k];
                }
            }
            Err(e) => flagged.push((p, e)),
        }
    }
    let dr = config.dynamic_range_db.max(0.0);
    let max = lin.max();
    let magnitudes = lin.map(|v| if max > 0.0 && v > 0.0 { (20.0 * (v / max).log10()).max(-dr) } else { -dr });
    Ok(RangeAzimuthImage {
        magnitudes,
        range_axis_m: (0..spectrum.nrows()).map(|p| p as f64 * params.range_bin_m()).collect(),
        angle_axis_deg: cols.iter().map(|c| c.1).collect(),
        columns: cols.iter().map(|c| c.0).collect(),
        rows_processed: bins.to_vec(),
        flagged_rows: flagged,
        solver_used: solver,
        dynamic_range_db: dr,
    })
}

/// Detection outcome of an image against the scene that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageScore {
    pub detected: usize,
    /// Indices into the scene of targets with no pixel nearby.
    pub missed: Vec<usize>,
    /// Pixels above the threshold that are not near any target.
    pub spurious: Vec<(usize, usize)>,
}

/// A target counts as found if some pixel within `tol` range bins and `tol`
/// image columns of its predicted cell reaches `threshold_db`.
pub fn score_image(
    image: &RangeAzimuthImage,
    scene: &[PointScatterer],
    params: &RadarParams,
    threshold_db: f64,
    tol: usize,
) -> ImageScore {
    let ncol = image.columns.len();
    let cells: Vec<(usize, Option<usize>)> = scene
        .iter()
        .map(|s| {
            let p = params.beat_bin(s.range_m).round() as usize;
            let k = params.angle_column(s.angle_deg).round() as usize % params.n_grid;
            (p, image.column_of(k))
        })
        .collect();
    let near = |p: usize, j: usize, cell: &(usize, Option<usize>)| match cell.1 {
        Some(cj) => p.abs_diff(cell.0) <= tol && j.abs_diff(cj) <= tol,
        None => false,
    };
    let hot: Vec<(usize, usize)> = (0..image.magnitudes.nrows())
        .flat_map(|p| (0..ncol).map(move |j| (p, j)))
        .filter(|&(p, j)| image.magnitudes[(p, j)] >= threshold_db)
        .collect();
    let missed: Vec<usize> =
        (0..scene.len()).filter(|&l| !hot.iter().any(|&(p, j)| near(p, j, &cells[l]))).collect();
    let spurious = hot.into_iter().filter(|&(p, j)| !cells.iter().any(|c| near(p, j, c))).collect();
    ImageScore { detected: scene.len() - missed.len(), missed, spurious }
}
