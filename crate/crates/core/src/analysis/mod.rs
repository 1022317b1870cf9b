//! Recovery metrics, penalty landscapes along a null-space line, and
//! numerical checks of the identities the solvers rely on.

mod identities;
mod landscape;

pub use identities::{
    expectation_identity_check, gauss_hermite, quadratic_min_identity_check, taylor_expectation_check,
    taylor_moments,
};
pub use landscape::{
    landscape_scan, landscape_scan_along, null_vector, reference_instance, LandscapeCurve, LandscapeParams,
    Method, ReferenceInstance,
};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::Dictionary;
use crate::solvers::{SolveResult, RESIDUE_FLOOR_DB};
use crate::C64;

/// Value reported for an exactly zero error, in dB.
pub const DB_FLOOR: f64 = RESIDUE_FLOOR_DB;

/// `20 log10 ||y - A c||`, floored at [`DB_FLOOR`].
pub fn residue_db(y: &DVector<C64>, dict: &Dictionary, c: &DVector<C64>) -> Result<f64> {
    if y.len() != dict.m() || c.len() != dict.n() {
        return invalid(format!(
            "shapes y={}, c={} do not fit a {}x{} dictionary",
            y.len(),
            c.len(),
            dict.m(),
            dict.n()
        ));
    }
    Ok(to_db(20.0, (y - dict.apply(c)).norm()))
}

/// `10 log10( ||c_true/max|c_true| - c_est/max|c_est| ||^2 / N )`.
pub fn normalized_mse(c_true: &DVector<C64>, c_est: &DVector<C64>) -> Result<f64> {
    if c_true.len() != c_est.len() || c_true.is_empty() {
        return invalid(format!("lengths {} and {} differ or are empty", c_true.len(), c_est.len()));
    }
    let peak = |c: &DVector<C64>| c.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let (pt, pe) = (peak(c_true), peak(c_est));
    if pt == 0.0 {
        return invalid("true spectrum is all zero");
    }
    if pe == 0.0 {
        return invalid("estimated spectrum is all zero");
    }
    let err: f64 = c_true
        .iter()
        .zip(c_est.iter())
        .map(|(t, e)| (t / pt - e / pe).norm_sqr())
        .sum::<f64>()
        / c_true.len() as f64;
    Ok(to_db(10.0, err))
}

fn to_db(scale: f64, x: f64) -> f64 {
    if x > 0.0 {
        (scale * x.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// `(precision, recall)` of an estimated support against the true one.
/// An empty estimate has precision 1 only when the truth is empty too.
pub fn support_scores(estimated: &[usize], truth: &[usize]) -> (f64, f64) {
    let hits = estimated.iter().filter(|i| truth.contains(i)).count() as f64;
    let precision = if estimated.is_empty() {
        if truth.is_empty() { 1.0 } else { 0.0 }
    } else {
        hits / estimated.len() as f64
    };
    let recall = if truth.is_empty() { 1.0 } else { hits / truth.len() as f64 };
    (precision, recall)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mse_db: f64,
    pub residue_db: f64,
    pub support_precision: f64,
    pub support_recall: f64,
    /// Last noise estimate of the run, `NaN` if the solver has none.
    pub sigma_n_est: f64,
}

impl MetricReport {
    pub fn evaluate(result: &SolveResult, truth: &DVector<C64>, y: &DVector<C64>, dict: &Dictionary) -> Result<Self> {
        let mse_db = normalized_mse(truth, &result.c_hat)?;
        let residue_db = residue_db(y, dict, &result.c_hat)?;
        let true_support: Vec<usize> =
            truth.iter().enumerate().filter(|(_, z)| z.norm() > 0.0).map(|(i, _)| i).collect();
        let (support_precision, support_recall) = support_scores(&result.support, &true_support);
        Ok(Self {
            mse_db,
            residue_db,
            support_precision,
            support_recall,
            sigma_n_est: result.final_sigma_n().unwrap_or(f64::NAN),
        })
    }

    /// `(name, value)` pairs in a fixed order, for CSV output.
    pub fn rows(&self) -> [(&'static str, f64); 5] {
        [
            ("mse_db", self.mse_db),
            ("residue_db", self.residue_db),
            ("support_precision", self.support_precision),
            ("support_recall", self.support_recall),
            ("sigma_n_est", self.sigma_n_est),
        ]
    }
}

/// Indices of local maxima within `floor_db` (a negative number) of the
/// global maximum. A plateau reports its first index.
pub fn find_peaks(magnitudes: &[f64], floor_db: f64) -> Vec<usize> {
    let max = magnitudes.iter().copied().fold(0.0f64, f64::max);
    if max == 0.0 {
        return Vec::new();
    }
    let floor = max * 10f64.powf(floor_db / 20.0);
    let n = magnitudes.len();
    (0..n)
        .filter(|&i| {
            let x = magnitudes[i];
            x >= floor && (i == 0 || x > magnitudes[i - 1]) && (i + 1 == n || x >= magnitudes[i + 1])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_fourier_dictionary, ArrayGeometry};
    use crate::rng;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn cv(v: &[(f64, f64)]) -> DVector<C64> {
        DVector::from_iterator(v.len(), v.iter().map(|&(a, b)| C64::new(a, b)))
    }

    #[test]
    fn residue_of_zero_coefficients_is_norm_of_y() {
        let d = build_fourier_dictionary(&ArrayGeometry::full(4).unwrap());
        let y = cv(&[(3.0, 0.0), (0.0, 4.0), (0.0, 0.0), (0.0, 0.0)]);
        let r = residue_db(&y, &d, &DVector::zeros(4)).unwrap();
        assert_relative_eq!(r, 20.0 * 5f64.log10(), epsilon = 1e-12);
    }

    #[test]
    fn residue_of_exact_solution_hits_floor() {
        let d = build_fourier_dictionary(&ArrayGeometry::full(8).unwrap());
        let c = cv(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.5, 0.5), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        let y = d.apply(&c);
        assert!(residue_db(&y, &d, &c).unwrap() <= -200.0);
    }

    #[test]
    fn residue_matches_naive_loop() {
        let g = ArrayGeometry::new(16, vec![0, 2, 3, 7, 11], crate::ArrayKind::Custom).unwrap();
        let d = build_fourier_dictionary(&g);
        let mut r = rng::seeded(4);
        let c = DVector::from_fn(16, |_, _| C64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5));
        let y = DVector::from_fn(5, |_, _| C64::new(r.random::<f64>(), r.random::<f64>()));
        let mut sq = 0.0;
        for (row, &m) in g.indices().iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..16 {
                let ph = 2.0 * std::f64::consts::PI * (k * m) as f64 / 16.0;
                acc += C64::new(ph.cos(), ph.sin()) * c[k];
            }
            sq += (y[row] - acc).norm_sqr();
        }
        assert_relative_eq!(residue_db(&y, &d, &c).unwrap(), 10.0 * sq.log10(), epsilon = 1e-12);
    }

    #[test]
    fn mse_is_scale_free_and_floors() {
        let t = cv(&[(1.0, 0.0), (0.0, -0.5), (0.2, 0.1)]);
        assert_eq!(normalized_mse(&t, &t).unwrap(), DB_FLOOR);
        assert_eq!(normalized_mse(&t, &(&t * C64::new(2.0, 0.0))).unwrap(), DB_FLOOR);
    }

    #[test]
    fn mse_hand_value() {
        let t = cv(&[(1.0, 0.0), (0.0, 0.0)]);
        let e = cv(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_relative_eq!(normalized_mse(&t, &e).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn mse_rejects_zero_spectra() {
        let t = cv(&[(1.0, 0.0), (0.0, 0.0)]);
        let z = DVector::zeros(2);
        assert!(normalized_mse(&t, &z).is_err());
        assert!(normalized_mse(&z, &t).is_err());
        assert!(normalized_mse(&t, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn support_scores_basic() {
        assert_eq!(support_scores(&[1, 2, 3, 4], &[2, 4]), (0.5, 1.0));
        assert_eq!(support_scores(&[], &[2]), (0.0, 0.0));
        assert_eq!(support_scores(&[], &[]), (1.0, 1.0));
    }

    #[test]
    fn peaks_above_floor() {
        let m = [0.1, 1.0, 0.2, 0.05, 0.3, 0.2, 0.01, 0.02];
        assert_eq!(find_peaks(&m, -20.0), vec![1, 4]);
        assert_eq!(find_peaks(&m, -40.0), vec![1, 4, 7]);
        assert!(find_peaks(&[0.0; 4], -20.0).is_empty());
        assert_eq!(find_peaks(&[1.0, 1.0, 0.0], -20.0), vec![0]);
    }
}
