use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, real};
use crate::model::Dictionary;
use crate::C64;

/// Gaussian posterior of the weighted ridge problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorState {
    /// Posterior mean `Gamma A^H y / sigma_n^2`.
    pub c: DVector<C64>,
    /// Diagonal of `Gamma = (A^H A / sigma_n^2 + diag(w))^-1`.
    pub gamma_diag: Vec<f64>,
    /// Full `Gamma`, when requested.
    pub gamma: Option<DMatrix<C64>>,
    pub weights: Vec<f64>,
    /// `Tr(A^H A Gamma)`.
    pub trace_gram_gamma: f64,
    /// Condition number of `A^H A / sigma_n^2 + diag(w)`, when requested.
    pub cond_h: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PosteriorOptions {
    /// Invert the M x M system `sigma_n^2 I + A diag(1/w) A^H` instead of the
    /// N x N one.
    pub use_woodbury: bool,
    pub need_full_gamma: bool,
    /// `None` skips the condition number; `Some(true)` computes it from
    /// eigenvalues, `Some(false)` estimates it by power iteration.
    pub cond: Option<bool>,
}

const POWER_ITERS: usize = 60;

/// `Gamma = (A^H A / sigma_n_sq + diag(w))^-1`, `c = Gamma A^H y / sigma_n_sq`.
pub fn posterior_update(
    dict: &Dictionary,
    y: &DVector<C64>,
    weights: &[f64],
    sigma_n_sq: f64,
    use_woodbury: bool,
    need_full_gamma: bool,
) -> Result<PosteriorState> {
    let opts = PosteriorOptions { use_woodbury, need_full_gamma, cond: None };
    posterior_update_with(dict, y, weights, sigma_n_sq, opts)
}

pub fn posterior_update_with(
    dict: &Dictionary,
    y: &DVector<C64>,
    weights: &[f64],
    sigma_n_sq: f64,
    opts: PosteriorOptions,
) -> Result<PosteriorState> {
    if weights.len() != dict.n() {
        return invalid(format!("{} weights for {} columns", weights.len(), dict.n()));
    }
    if y.len() != dict.m() {
        return invalid(format!("measurement length {} for {} rows", y.len(), dict.m()));
    }
    if !(sigma_n_sq > 0.0 && sigma_n_sq.is_finite()) {
        return invalid(format!("noise variance must be positive, got {sigma_n_sq}"));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return invalid(format!("weights must be positive and finite, got {w}"));
    }
    if opts.use_woodbury {
        woodbury(dict, y, weights, sigma_n_sq, opts)
    } else {
        direct(dict, y, weights, sigma_n_sq, opts)
    }
}

fn system_matrix(dict: &Dictionary, weights: &[f64], sigma_n_sq: f64) -> DMatrix<C64> {
    let mut h = dict.gram() / real(sigma_n_sq);
    for (i, &w) in weights.iter().enumerate() {
        h[(i, i)] += real(w);
    }
    h
}

fn direct(
    dict: &Dictionary,
    y: &DVector<C64>,
    weights: &[f64],
    sigma_n_sq: f64,
    opts: PosteriorOptions,
) -> Result<PosteriorState> {
    let h = system_matrix(dict, weights, sigma_n_sq);
    let chol = linalg::cholesky(h.clone())?;
    let gamma = chol.inverse();
    let b = dict.adjoint(y) / real(sigma_n_sq);
    let c = &gamma * b;
    let gamma_diag = linalg::real_diagonal(&gamma);
    let gram = dict.gram();
    // Tr(G Gamma) = sum_ij G_ij Gamma_ji, both Hermitian
    let trace_gram_gamma = gram.iter().zip(gamma.transpose().iter()).map(|(g, t)| (g * t).re).sum();
    let cond_h = opts.cond.map(|exact| {
        if exact {
            exact_cond(&h, &gamma)
        } else {
            let n = dict.n();
            let hi = linalg::power_max_eig(n, POWER_ITERS, |v| &h * v);
            let inv = linalg::power_max_eig(n, POWER_ITERS, |v| &gamma * v);
            hi * inv
        }
    });
    check_finite(&c, &gamma_diag)?;
    Ok(PosteriorState {
        c,
        gamma_diag,
        gamma: opts.need_full_gamma.then_some(gamma),
        weights: weights.to_vec(),
        trace_gram_gamma,
        cond_h,
    })
}

fn woodbury(
    dict: &Dictionary,
    y: &DVector<C64>,
    weights: &[f64],
    sigma_n_sq: f64,
    opts: PosteriorOptions,
) -> Result<PosteriorState> {
    let m = dict.m();
    let d: Vec<f64> = weights.iter().map(|w| 1.0 / w).collect();
    let mut s = dict.weighted_gram(&d);
    for i in 0..m {
        s[(i, i)] += real(sigma_n_sq);
    }
    let chol = linalg::cholesky(s)?;
    let s_inv = chol.inverse();
    let u = chol.solve(y);
    let c = DVector::from_iterator(d.len(), dict.adjoint(&u).iter().zip(&d).map(|(z, di)| z * di));
    let q = dict.quad_diag(&s_inv);
    let gamma_diag: Vec<f64> = d.iter().zip(&q).map(|(di, qi)| di - di * di * qi).collect();
    let tr_s_inv: f64 = s_inv.diagonal().iter().map(|z| z.re).sum();
    let trace_gram_gamma = m as f64 * sigma_n_sq - sigma_n_sq * sigma_n_sq * tr_s_inv;

    let need_gamma = opts.need_full_gamma || opts.cond == Some(true);
    let gamma = need_gamma.then(|| {
        // D - (A D)^H S^-1 (A D)
        let mut ad = dict.atoms().clone();
        for (k, mut col) in ad.column_iter_mut().enumerate() {
            col *= real(d[k]);
        }
        let mut g = -(ad.ad_mul(&(&s_inv * &ad)));
        for (k, &dk) in d.iter().enumerate() {
            g[(k, k)] += real(dk);
        }
        g
    });
    let cond_h = opts.cond.map(|exact| {
        if exact {
            let h = system_matrix(dict, weights, sigma_n_sq);
            exact_cond(&h, gamma.as_ref().expect("full gamma computed for exact cond"))
        } else {
            let n = dict.n();
            let hi = linalg::power_max_eig(n, POWER_ITERS, |v| {
                let hv = dict.adjoint(&dict.apply(v)) / real(sigma_n_sq);
                DVector::from_iterator(n, hv.iter().zip(weights).zip(v.iter()).map(|((a, w), x)| a + x * w))
            });
            let inv = linalg::power_max_eig(n, POWER_ITERS, |v| {
                let dv = DVector::from_iterator(n, v.iter().zip(&d).map(|(x, di)| x * di));
                let corr = dict.adjoint(&chol.solve(&dict.apply(&dv)));
                DVector::from_iterator(n, dv.iter().zip(corr.iter()).zip(&d).map(|((a, b), di)| a - b * di))
            });
            hi * inv
        }
    });
    check_finite(&c, &gamma_diag)?;
    Ok(PosteriorState {
        c,
        gamma_diag,
        gamma: if opts.need_full_gamma { gamma } else { None },
        weights: weights.to_vec(),
        trace_gram_gamma,
        cond_h,
    })
}

/// `lambda_max(H) * lambda_max(H^-1)`. Reading the small end of the spectrum
/// off the inverse keeps it accurate when the weights span many decades.
fn exact_cond(h: &DMatrix<C64>, gamma: &DMatrix<C64>) -> f64 {
    let top = |m: &DMatrix<C64>| m.clone().symmetric_eigenvalues().iter().fold(0.0f64, |a, &b| a.max(b));
    top(h) * top(gamma)
}

fn check_finite(c: &DVector<C64>, gamma_diag: &[f64]) -> Result<()> {
    let ok = c.iter().all(|z| z.re.is_finite() && z.im.is_finite()) && gamma_diag.iter().all(|g| g.is_finite());
    if ok {
        Ok(())
    } else {
        Err(Error::IllConditioned { cond: f64::INFINITY })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_fourier_dictionary, make_sparse_array};
    use crate::rng;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_dict(m: usize, n: usize, seed: u64) -> Dictionary {
        let mut r = rng::seeded(seed);
        Dictionary::from_matrix(DMatrix::from_fn(m, n, |_, _| {
            C64::new(r.sample(StandardNormal), r.sample(StandardNormal))
        }))
    }

    fn random_vec(n: usize, seed: u64) -> DVector<C64> {
        let mut r = rng::seeded(seed);
        DVector::from_fn(n, |_, _| C64::new(r.sample(StandardNormal), r.sample(StandardNormal)))
    }

    #[test]
    fn identity_dictionary_is_diagonal() {
        let a = Dictionary::from_matrix(DMatrix::identity(3, 3));
        let y = DVector::from_vec(vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.0), C64::new(0.0, 3.0)]);
        let (w, s) = (4.0, 0.25);
        let st = posterior_update(&a, &y, &[w; 3], s, false, false).unwrap();
        for i in 0..3 {
            assert_relative_eq!(st.c[i].re, y[i].re / (1.0 + s * w), epsilon = 1e-14);
            assert_relative_eq!(st.c[i].im, y[i].im / (1.0 + s * w), epsilon = 1e-14);
            assert_relative_eq!(st.gamma_diag[i], 1.0 / (1.0 / s + w), epsilon = 1e-14);
        }
    }

    #[test]
    fn woodbury_matches_direct_random() {
        let a = random_dict(8, 16, 3);
        let y = random_vec(8, 4);
        let mut r = rng::seeded(5);
        let w: Vec<f64> = (0..16).map(|_| r.random_range(0.1..10.0)).collect();
        let opts = PosteriorOptions { use_woodbury: false, need_full_gamma: true, cond: Some(true) };
        let d = posterior_update_with(&a, &y, &w, 0.3, opts).unwrap();
        let wb = posterior_update_with(&a, &y, &w, 0.3, PosteriorOptions { use_woodbury: true, ..opts }).unwrap();
        assert!((&d.c - &wb.c).norm() <= 1e-8 * d.c.norm());
        for (x, z) in d.gamma_diag.iter().zip(&wb.gamma_diag) {
            assert_relative_eq!(x, z, max_relative = 1e-8);
        }
        assert_relative_eq!(d.trace_gram_gamma, wb.trace_gram_gamma, max_relative = 1e-8);
        assert_relative_eq!(d.cond_h.unwrap(), wb.cond_h.unwrap(), max_relative = 1e-6);
        let gd = d.gamma.unwrap();
        let gw = wb.gamma.unwrap();
        assert!((&gd - &gw).norm() <= 1e-8 * gd.norm());
    }

    #[test]
    fn fourier_fast_path_matches_dense() {
        let g = make_sparse_array(64, 20, 9).unwrap();
        let fast = build_fourier_dictionary(&g);
        let dense = fast.to_dense();
        let y = random_vec(20, 1);
        let mut r = rng::seeded(2);
        let w: Vec<f64> = (0..64).map(|_| r.random_range(0.5..50.0)).collect();
        for wood in [false, true] {
            let opts = PosteriorOptions { use_woodbury: wood, need_full_gamma: false, cond: Some(false) };
            let a = posterior_update_with(&fast, &y, &w, 0.1, opts).unwrap();
            let b = posterior_update_with(&dense, &y, &w, 0.1, opts).unwrap();
            assert!((&a.c - &b.c).norm() <= 1e-10 * a.c.norm());
            assert_relative_eq!(a.trace_gram_gamma, b.trace_gram_gamma, max_relative = 1e-10);
        }
    }

    #[test]
    fn estimated_cond_tracks_exact() {
        let g = make_sparse_array(64, 20, 9).unwrap();
        let a = build_fourier_dictionary(&g);
        let y = random_vec(20, 1);
        let w: Vec<f64> = (0..64).map(|i| if i % 5 == 0 { 1e-2 } else { 1e4 }).collect();
        let exact = PosteriorOptions { use_woodbury: false, need_full_gamma: false, cond: Some(true) };
        let est = PosteriorOptions { use_woodbury: true, need_full_gamma: false, cond: Some(false) };
        let ce = posterior_update_with(&a, &y, &w, 0.01, exact).unwrap().cond_h.unwrap();
        let cs = posterior_update_with(&a, &y, &w, 0.01, est).unwrap().cond_h.unwrap();
        assert!(cs <= ce * 1.0001 && cs >= ce / 10.0, "estimate {cs} exact {ce}");
    }

    #[test]
    fn huge_weights_switch_columns_off() {
        let a = random_dict(6, 9, 11);
        let y = random_vec(6, 12);
        let off = [1usize, 4, 7];
        let w: Vec<f64> = (0..9).map(|i| if off.contains(&i) { 1e12 } else { 0.5 }).collect();
        let s = 0.2;
        let st = posterior_update(&a, &y, &w, s, false, false).unwrap();
        let keep: Vec<usize> = (0..9).filter(|i| !off.contains(i)).collect();
        let ar = a.atoms().select_columns(&keep);
        let mut h = ar.ad_mul(&ar);
        for i in 0..keep.len() {
            h[(i, i)] += real(s * 0.5);
        }
        let reduced = h.cholesky().unwrap().solve(&ar.ad_mul(&y));
        for &i in &off {
            assert!(st.c[i].norm() < 1e-9);
        }
        for (j, &i) in keep.iter().enumerate() {
            assert!((st.c[i] - reduced[j]).norm() < 1e-9 * reduced.norm());
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let a = random_dict(3, 4, 1);
        let y = random_vec(3, 2);
        assert!(posterior_update(&a, &y, &[1.0; 3], 1.0, false, false).is_err());
        assert!(posterior_update(&a, &y, &[1.0; 4], 0.0, false, false).is_err());
        assert!(posterior_update(&a, &y, &[1.0, -1.0, 1.0, 1.0], 1.0, false, false).is_err());
    }
}
