//! Penalty values along `c(v) = c_op + v a_null` for a wide matrix with a
//! one-dimensional null space. Every point on the line fits the data
//! exactly, so the penalty alone decides where a solver can get stuck.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{self, real};
use crate::model::Dictionary;
use crate::solvers::{blrc_gamma_update, SBL_TAU_CAP};
use crate::{rng, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param", rename_all = "snake_case")]
pub enum Method {
    /// `sum |c_i|^p`.
    Lp(f64),
    /// `sum 2 ln(1 + |c_i|^2 / gamma^2)` at a fixed `gamma`.
    Cg(f64),
    Sbl,
    Blrc,
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Lp(p) => format!("lp_{p}"),
            Method::Cg(g) => format!("cg_{g}"),
            Method::Sbl => "sbl".into(),
            Method::Blrc => "blrc".into(),
        }
    }
}

/// Settings for the inner hyper-parameter minimization of the SBL and BLRC
/// penalties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LandscapeParams {
    /// Noise variance held fixed along the line. Re-estimating it would
    /// drive it to zero, since every point fits the data exactly. Small
    /// values approach the noise-free penalty.
    pub sigma_n_sq: f64,
    pub max_inner: usize,
    /// Stop once the penalty drops by less than this fraction.
    pub rel_tol: f64,
    pub init_tau: f64,
    pub init_gamma_sq: f64,
}

impl Default for LandscapeParams {
    fn default() -> Self {
        Self { sigma_n_sq: 1e-4, max_inner: 200, rel_tol: 1e-9, init_tau: 1.0, init_gamma_sq: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeCurve {
    pub v_grid: Vec<f64>,
    /// Penalty divided by its value at the grid point nearest `v = 0`.
    pub penalty: Vec<f64>,
    pub method: Method,
}

impl LandscapeCurve {
    /// Indices of strict interior local minima.
    pub fn local_minima(&self) -> Vec<usize> {
        let p = &self.penalty;
        (1..p.len().saturating_sub(1)).filter(|&i| p[i] < p[i - 1] && p[i] < p[i + 1]).collect()
    }

    pub fn argmin(&self) -> usize {
        self.penalty
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

/// Fixed wide instance with a known sparsest solution.
#[derive(Debug, Clone)]
pub struct ReferenceInstance {
    pub a: Dictionary,
    pub c_op: DVector<C64>,
    pub a_null: DVector<C64>,
    pub v_grid: Vec<f64>,
}

const REFERENCE_SEED: u64 = 20;
const REFERENCE_M: usize = 4;

/// 4 x 5 matrix with standard Gaussian entries and a 2-sparse `c_op`. The
/// grid is symmetric, contains `v = 0` and reaches a quarter past the
/// farthest point where a coefficient of `c_op + v a_null` vanishes.
pub fn reference_instance() -> ReferenceInstance {
    let mut r = rng::seeded(REFERENCE_SEED);
    let n = REFERENCE_M + 1;
    let a = DMatrix::from_fn(REFERENCE_M, n, |_, _| real(StandardNormal.sample(&mut r)));
    let a = Dictionary::from_matrix(a);
    let mut c_op = DVector::zeros(n);
    c_op[1] = real(1.0);
    c_op[3] = real(-0.6);
    let a_null = null_vector(&a).expect("Gaussian 4x5 matrix has full row rank");
    let reach = [1usize, 3].iter().map(|&i| (c_op[i] / a_null[i]).norm()).fold(0.0, f64::max);
    let half = 300;
    let step = 1.25 * reach / half as f64;
    let v_grid = (-half..=half).map(|k| k as f64 * step).collect();
    ReferenceInstance { a, c_op, a_null, v_grid }
}

/// Unit-norm spanning vector of the null space of an `M x (M+1)` matrix of
/// full row rank, with its largest entry real and positive.
pub fn null_vector(a: &Dictionary) -> Result<DVector<C64>> {
    if a.n() != a.m() + 1 {
        return invalid(format!("need N = M + 1 for a one-dimensional null space, got {}x{}", a.m(), a.n()));
    }
    let eig = a.gram().clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..a.n()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let top = eig.eigenvalues[order[a.n() - 1]];
    if !(top > 0.0) || eig.eigenvalues[order[1]] <= 1e-10 * top {
        return invalid("matrix is rank deficient: null space has more than one dimension");
    }
    let v = eig.eigenvectors.column(order[0]).into_owned();
    let big = v.iter().copied().max_by(|x, y| x.norm().total_cmp(&y.norm())).unwrap();
    let phase = big / real(big.norm());
    let norm = v.norm();
    Ok(v / phase / real(norm))
}

/// Scans the penalty of `method` along `c_op + v a_null`, where `a_null`
/// is computed from `a`.
pub fn landscape_scan(
    a: &Dictionary,
    c_op: &DVector<C64>,
    v_grid: &[f64],
    method: Method,
    params: &LandscapeParams,
) -> Result<LandscapeCurve> {
    let a_null = null_vector(a)?;
    landscape_scan_along(a, c_op, &a_null, v_grid, method, params)
}

/// Same scan with a caller-supplied null-space direction.
pub fn landscape_scan_along(
    a: &Dictionary,
    c_op: &DVector<C64>,
    a_null: &DVector<C64>,
    v_grid: &[f64],
    method: Method,
    params: &LandscapeParams,
) -> Result<LandscapeCurve> {
    if c_op.len() != a.n() || a_null.len() != a.n() {
        return invalid("c_op and a_null must have one entry per column");
    }
    if v_grid.is_empty() {
        return invalid("empty v grid");
    }
    match method {
        Method::Lp(p) if !(p > 0.0) => return invalid(format!("lp exponent must be positive, got {p}")),
        Method::Cg(g) if !(g > 0.0) => return invalid(format!("cg gamma must be positive, got {g}")),
        _ => {}
    }
    if !(params.sigma_n_sq > 0.0) || params.max_inner == 0 {
        return invalid("landscape needs sigma_n_sq > 0 and max_inner >= 1");
    }
    let eval = |v: &f64| {
        let c = c_op + a_null * real(*v);
        let mag2: Vec<f64> = c.iter().map(|z| z.norm_sqr()).collect();
        penalty(a, &mag2, method, params)
    };
    #[cfg(feature = "parallel")]
    let raw: Vec<f64> = {
        use rayon::prelude::*;
        v_grid.par_iter().map(eval).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let raw: Vec<f64> = v_grid.iter().map(eval).collect::<Result<_>>()?;

    let zero = (0..v_grid.len()).min_by(|&i, &j| v_grid[i].abs().total_cmp(&v_grid[j].abs())).unwrap();
    let scale = raw[zero];
    if !(scale > 0.0 && scale.is_finite()) {
        return invalid(format!("penalty at v = {} is {scale}, cannot normalize", v_grid[zero]));
    }
    Ok(LandscapeCurve { v_grid: v_grid.to_vec(), penalty: raw.iter().map(|x| x / scale).collect(), method })
}

fn penalty(a: &Dictionary, mag2: &[f64], method: Method, params: &LandscapeParams) -> Result<f64> {
    Ok(match method {
        Method::Lp(p) => mag2.iter().map(|m| m.powf(p / 2.0)).sum(),
        Method::Cg(g) => mag2.iter().map(|m| 2.0 * (m / (g * g)).ln_1p()).sum(),
        Method::Sbl => sbl_penalty(a, mag2, params)?,
        Method::Blrc => blrc_penalty(a, mag2, params)?,
    })
}

/// `ln |I + A D A^H / sigma^2|` and `diag Gamma` for prior variances `d`.
fn logdet_and_gamma(a: &Dictionary, d: &[f64], sigma_sq: f64) -> Result<(f64, Vec<f64>)> {
    let m = a.m();
    let mut s = a.weighted_gram(d);
    for i in 0..m {
        s[(i, i)] += real(sigma_sq);
    }
    let chol = linalg::cholesky(s)?;
    let logdet = chol.l_dirty().diagonal().iter().map(|z| 2.0 * z.re.ln()).sum::<f64>() - m as f64 * sigma_sq.ln();
    let p = chol.inverse();
    let q = a.quad_diag(&p);
    let gamma = d.iter().zip(&q).map(|(&di, &qi)| (di - di * di * qi).max(0.0)).collect();
    Ok((logdet, gamma))
}

/// `min_tau sum tau_i |c_i|^2 + ln |I + A diag(1/tau) A^H / sigma^2|`, with
/// `tau` moved by the fixed-point update `tau_i = (1 - tau_i Gamma_ii) / |c_i|^2`.
fn sbl_penalty(a: &Dictionary, mag2: &[f64], params: &LandscapeParams) -> Result<f64> {
    let mut tau = vec![params.init_tau; mag2.len()];
    let mut best = f64::INFINITY;
    for _ in 0..params.max_inner {
        let d: Vec<f64> = tau.iter().map(|t| 1.0 / t).collect();
        let (logdet, gamma) = logdet_and_gamma(a, &d, params.sigma_n_sq)?;
        let h = tau.iter().zip(mag2).map(|(t, m)| t * m).sum::<f64>() + logdet;
        let settled = best.is_finite() && best - h < params.rel_tol * best.abs();
        best = best.min(h);
        if settled {
            break;
        }
        for i in 0..tau.len() {
            let num = 1.0 - tau[i] * gamma[i];
            tau[i] = if mag2[i] < 1e-30 || num <= 0.0 { SBL_TAU_CAP } else { (num / mag2[i]).min(SBL_TAU_CAP) };
        }
    }
    Ok(best)
}

/// `min_gamma sum [ln(1 + |c_i|^2/gamma^2)/2 + |c_i|^2/(gamma^2 + |c_i|^2)]
/// + ln |I + A Theta^-1 A^H / sigma^2|` with `Theta = diag(2/(gamma^2 + |c_i|^2))`,
/// `gamma^2` moved by the AEM scale update.
fn blrc_penalty(a: &Dictionary, mag2: &[f64], params: &LandscapeParams) -> Result<f64> {
    let mut g2 = params.init_gamma_sq;
    let mut best = f64::INFINITY;
    for _ in 0..params.max_inner {
        let d: Vec<f64> = mag2.iter().map(|m| (g2 + m) / 2.0).collect();
        let (logdet, gamma) = logdet_and_gamma(a, &d, params.sigma_n_sq)?;
        let prior: f64 = mag2.iter().map(|m| 0.5 * (m / g2).ln_1p() + m / (g2 + m)).sum();
        let h = prior + logdet;
        let settled = best.is_finite() && best - h < params.rel_tol * best.abs();
        best = best.min(h);
        if settled {
            break;
        }
        let eta: Vec<f64> = gamma.iter().zip(mag2).map(|(g, m)| g + m).collect();
        let xi: Vec<f64> = gamma.iter().zip(mag2).map(|(g, m)| 4.0 * m * g + 2.0 * g * g).collect();
        g2 = blrc_gamma_update(&eta, &xi, g2)?.gamma_sq;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn methods() -> [Method; 5] {
        [Method::Lp(0.01), Method::Lp(1.0), Method::Cg(0.2), Method::Sbl, Method::Blrc]
    }

    #[test]
    fn reference_line_fits_data() {
        let inst = reference_instance();
        let y = inst.a.apply(&inst.c_op);
        for v in [-1.7, 0.3, 2.2] {
            let c = &inst.c_op + &inst.a_null * real(v);
            assert!((inst.a.apply(&c) - &y).norm() < 1e-12);
        }
        assert_relative_eq!(inst.a_null.norm(), 1.0, epsilon = 1e-12);
        assert!(inst.v_grid.contains(&0.0));
    }

    #[test]
    fn all_curves_normalize_to_one_at_zero() {
        let inst = reference_instance();
        let zero = inst.v_grid.iter().position(|&v| v == 0.0).unwrap();
        for m in methods() {
            let curve = landscape_scan(&inst.a, &inst.c_op, &inst.v_grid, m, &LandscapeParams::default()).unwrap();
            assert_relative_eq!(curve.penalty[zero], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn l1_curve_is_convex() {
        let inst = reference_instance();
        let curve =
            landscape_scan(&inst.a, &inst.c_op, &inst.v_grid, Method::Lp(1.0), &LandscapeParams::default()).unwrap();
        for w in curve.penalty.windows(3) {
            assert!(w[1] <= 0.5 * (w[0] + w[2]) + 1e-12);
        }
    }

    #[test]
    fn near_l0_curve_has_several_pits() {
        let inst = reference_instance();
        let curve =
            landscape_scan(&inst.a, &inst.c_op, &inst.v_grid, Method::Lp(0.01), &LandscapeParams::default()).unwrap();
        assert!(curve.local_minima().len() >= 3, "{:?}", curve.local_minima());
        assert_eq!(curve.v_grid[curve.argmin()], 0.0);
    }

    #[test]
    fn bayesian_curves_have_one_pit_at_zero() {
        let inst = reference_instance();
        let step = inst.v_grid[1] - inst.v_grid[0];
        for m in [Method::Sbl, Method::Blrc] {
            let curve = landscape_scan(&inst.a, &inst.c_op, &inst.v_grid, m, &LandscapeParams::default()).unwrap();
            let mins = curve.local_minima();
            assert_eq!(mins.len(), 1, "{m:?}: {:?}", mins.iter().map(|&i| curve.v_grid[i]).collect::<Vec<_>>());
            assert_eq!(mins[0], curve.argmin());
            assert!(curve.v_grid[mins[0]].abs() <= step);
        }
    }

    #[test]
    fn scaling_null_vector_reparameterizes() {
        let inst = reference_instance();
        let doubled = &inst.a_null * real(2.0);
        let half: Vec<f64> = inst.v_grid.iter().map(|v| v / 2.0).collect();
        for m in methods() {
            let p = LandscapeParams::default();
            let c1 = landscape_scan_along(&inst.a, &inst.c_op, &inst.a_null, &inst.v_grid, m, &p).unwrap();
            let c2 = landscape_scan_along(&inst.a, &inst.c_op, &doubled, &half, m, &p).unwrap();
            for (x, y) in c1.penalty.iter().zip(&c2.penalty) {
                assert_relative_eq!(x, y, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn rank_deficient_rejected() {
        let mut a = DMatrix::from_element(3, 4, real(0.0));
        a[(0, 0)] = real(1.0);
        a[(1, 1)] = real(1.0);
        a[(2, 1)] = real(2.0);
        let d = Dictionary::from_matrix(a);
        assert!(null_vector(&d).is_err());
        let wide = Dictionary::from_matrix(DMatrix::from_element(2, 4, real(1.0)));
        assert!(null_vector(&wide).is_err());
    }
}
