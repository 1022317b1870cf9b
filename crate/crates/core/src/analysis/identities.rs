use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::linalg::{self, real};
use crate::{rng, C64};

/// Monte Carlo check of `E||y - A c||^2 = ||y - A mean||^2 + Tr(A^H A cov)`
/// for circular complex Gaussian `c`. Returns `|MC - closed| / closed`, or
/// the absolute gap when the closed form is zero.
pub fn expectation_identity_check(
    a: &DMatrix<C64>,
    mean: &DVector<C64>,
    cov: &DMatrix<C64>,
    y: &DVector<C64>,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    let (m, n) = a.shape();
    if mean.len() != n || cov.shape() != (n, n) || y.len() != m {
        return invalid("shapes of A, mean, cov and y do not agree");
    }
    if n_samples == 0 {
        return invalid("need at least one sample");
    }
    // cov = L L^H from the eigen-decomposition; tiny negative eigenvalues
    // from rounding are treated as zero
    let eig = cov.clone().symmetric_eigen();
    let mut l = eig.eigenvectors.clone();
    for (j, mut col) in l.column_iter_mut().enumerate() {
        col *= real(eig.eigenvalues[j].max(0.0).sqrt());
    }
    let r0 = y - a * mean;
    let b = a * &l;
    let closed = r0.norm_squared() + (a.adjoint() * a * cov).trace().re;

    let mut r = rng::seeded(seed);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut z = DVector::<C64>::zeros(n);
    let mut total = 0.0;
    for _ in 0..n_samples {
        for zi in z.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut r);
            let im: f64 = StandardNormal.sample(&mut r);
            *zi = C64::new(re * s, im * s);
        }
        total += (&r0 - &b * &z).norm_squared();
    }
    let mc = total / n_samples as f64;
    Ok(if closed > 0.0 { (mc - closed).abs() / closed } else { mc.abs() })
}

/// Compares `y^H (sigma^2 I + A Sigma^-1 A^H)^-1 y` with
/// `||y - A c_o||^2 / sigma^2 + c_o^H Sigma c_o` at the minimizer
/// `c_o = (sigma^2 Sigma + A^H A)^-1 A^H y`. Returns the relative gap.
pub fn quadratic_min_identity_check(
    a: &DMatrix<C64>,
    y: &DVector<C64>,
    sigma_diag: &[f64],
    sigma_n_sq: f64,
) -> Result<f64> {
    let (m, n) = a.shape();
    if sigma_diag.len() != n || y.len() != m {
        return invalid("shapes of A, Sigma and y do not agree");
    }
    if sigma_diag.iter().any(|s| !(*s > 0.0)) || !(sigma_n_sq > 0.0) {
        return invalid("Sigma entries and sigma_n^2 must be positive");
    }
    let mut scaled = a.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col /= real(sigma_diag[j]);
    }
    let mut outer = &scaled * a.adjoint();
    for i in 0..m {
        outer[(i, i)] += real(sigma_n_sq);
    }
    let lhs = y.dotc(&linalg::cholesky(outer)?.solve(y)).re;

    let mut inner = a.adjoint() * a;
    for (i, s) in sigma_diag.iter().enumerate() {
        inner[(i, i)] += real(sigma_n_sq * s);
    }
    let c_o = linalg::cholesky(inner)?.solve(&(a.adjoint() * y));
    let quad: f64 = c_o.iter().zip(sigma_diag).map(|(c, s)| s * c.norm_sqr()).sum();
    let rhs = (y - a * &c_o).norm_squared() / sigma_n_sq + quad;
    Ok(if lhs != 0.0 { (lhs - rhs).abs() / lhs.abs() } else { rhs.abs() })
}

/// `(E c^2, Var c^2)` for a real Gaussian `c ~ (mean, var)`.
pub fn taylor_moments(mean: f64, var: f64) -> (f64, f64) {
    (var + mean * mean, 4.0 * mean * mean * var + 2.0 * var * var)
}

/// Nodes and weights of `n`-point Gauss-Hermite quadrature for the weight
/// `exp(-x^2)`, from the eigen-decomposition of the Jacobi matrix.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let b = (i as f64 / 2.0).sqrt();
        j[(i, i - 1)] = b;
        j[(i - 1, i)] = b;
    }
    let eig = j.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], std::f64::consts::PI.sqrt() * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// `|ln(1 + tau eta) - tau^2 xi / (2 (1 + tau eta)^2) - E ln(1 + tau c^2)|`
/// with the expectation over `c ~ (mean, var)` taken by Gauss-Hermite
/// quadrature on `n_points` nodes.
pub fn taylor_expectation_check(eta_hat: f64, xi_hat: f64, tau: f64, mean: f64, var: f64, n_points: usize) -> f64 {
    let q = 1.0 + tau * eta_hat;
    let approx = q.ln() - tau * tau * xi_hat / (2.0 * q * q);
    let exact = if var == 0.0 {
        (tau * mean * mean).ln_1p()
    } else {
        let (x, w) = gauss_hermite(n_points.max(1));
        let s = (2.0 * var).sqrt();
        x.iter().zip(&w).map(|(xi, wi)| wi * (tau * (mean + s * xi).powi(2)).ln_1p()).sum::<f64>()
            / std::f64::consts::PI.sqrt()
    };
    (approx - exact).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cmat(m: usize, n: usize, seed: u64) -> DMatrix<C64> {
        let mut r = rng::seeded(seed);
        DMatrix::from_fn(m, n, |_, _| {
            C64::new(StandardNormal.sample(&mut r), StandardNormal.sample(&mut r))
        })
    }

    #[test]
    fn zero_covariance_is_exact() {
        let a = cmat(3, 5, 1);
        let mean = DVector::from_element(5, C64::new(0.2, -0.1));
        let y = DVector::from_element(3, real(1.0));
        let e = expectation_identity_check(&a, &mean, &DMatrix::zeros(5, 5), &y, 10, 0).unwrap();
        assert!(e < 1e-14);
    }

    #[test]
    fn identity_model_matches_trace() {
        let n = 6;
        let a = DMatrix::<C64>::identity(n, n);
        let e =
            expectation_identity_check(&a, &DVector::zeros(n), &DMatrix::identity(n, n), &DVector::zeros(n), 200_000, 3)
                .unwrap();
        assert!(e < 1e-2, "{e}");
    }

    #[test]
    fn monte_carlo_error_shrinks_like_root_n() {
        let a = cmat(4, 6, 5);
        let b = cmat(6, 6, 6);
        let cov = &b * b.adjoint() / real(6.0);
        let mean = DVector::from_element(6, C64::new(0.3, 0.1));
        let y = DVector::from_element(4, real(1.0));
        let rms = |n: usize| {
            let s: f64 = (0..60)
                .map(|seed| expectation_identity_check(&a, &mean, &cov, &y, n, 100 + seed).unwrap().powi(2))
                .sum();
            (s / 60.0).sqrt()
        };
        let ratio = rms(1000) / rms(10_000);
        let root10 = 10f64.sqrt();
        assert!(ratio > root10 / 2.0 && ratio < root10 * 2.0, "{ratio}");
    }

    #[test]
    fn quadratic_identity_zero_matrix() {
        let a = DMatrix::<C64>::zeros(2, 3);
        let y = DVector::from_vec(vec![C64::new(1.0, 1.0), real(2.0)]);
        assert!(quadratic_min_identity_check(&a, &y, &[1.0, 2.0, 3.0], 0.5).unwrap() < 1e-15);
    }

    #[test]
    fn quadratic_identity_scalar_by_hand() {
        // LHS = y^2 / (s2 + a^2/S), c_o = a y / (s2 S + a^2)
        let (av, yv, sv, s2) = (2.0, 3.0, 0.5, 0.25);
        let a = DMatrix::from_element(1, 1, real(av));
        let y = DVector::from_element(1, real(yv));
        let lhs = yv * yv / (s2 + av * av / sv);
        let c = av * yv / (s2 * sv + av * av);
        let rhs = (yv - av * c).powi(2) / s2 + sv * c * c;
        assert_relative_eq!(lhs, rhs, max_relative = 1e-14);
        assert!(quadratic_min_identity_check(&a, &y, &[sv], s2).unwrap() < 1e-14);
    }

    #[test]
    fn hermite_rule_integrates_polynomials() {
        let (x, w) = gauss_hermite(10);
        let pi = std::f64::consts::PI;
        assert_relative_eq!(w.iter().sum::<f64>(), pi.sqrt(), max_relative = 1e-12);
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert_relative_eq!(m2, pi.sqrt() / 2.0, max_relative = 1e-12);
        assert_relative_eq!(m4, 3.0 * pi.sqrt() / 4.0, max_relative = 1e-12);
    }

    #[test]
    fn taylor_exact_without_variance() {
        let (eta, xi) = taylor_moments(1.3, 0.0);
        assert!(taylor_expectation_check(eta, xi, 2.0, 1.3, 0.0, 20) <= 1e-12);
    }

    #[test]
    fn taylor_accurate_for_small_variance() {
        let (eta, xi) = taylor_moments(1.0, 0.01);
        assert!(taylor_expectation_check(eta, xi, 1.0, 1.0, 0.01, 40) < 1e-3);
    }

    #[test]
    fn taylor_breaks_down_for_wide_prior() {
        let (eta, xi) = taylor_moments(0.0, 10.0);
        let wide = taylor_expectation_check(eta, xi, 10.0, 0.0, 10.0, 80);
        let (eta, xi) = taylor_moments(1.0, 0.01);
        let narrow = taylor_expectation_check(eta, xi, 1.0, 1.0, 0.01, 80);
        // no absolute bound here, only orders of magnitude worse than the narrow case
        assert!(wide > 100.0 * narrow, "{wide} vs {narrow}");
    }
}
