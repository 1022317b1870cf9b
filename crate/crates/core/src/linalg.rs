//! Small Hermitian helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::C64;

/// Cholesky factor of a Hermitian positive-definite matrix, or an
/// ill-conditioned error carrying a cheap diagonal-ratio condition bound.
pub fn cholesky(h: DMatrix<C64>) -> Result<Cholesky<C64, Dyn>> {
    let diag_bound = diagonal_ratio(&h);
    Cholesky::new(h).ok_or(Error::IllConditioned { cond: diag_bound })
}

/// `max |h_ii| / min |h_ii|`, a lower bound on the 2-norm condition number
/// of a Hermitian positive-definite matrix.
pub fn diagonal_ratio(h: &DMatrix<C64>) -> f64 {
    let (lo, hi) = h
        .diagonal()
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), z| (lo.min(z.re.abs()), hi.max(z.re.abs())));
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Exact 2-norm condition number of a Hermitian positive-definite matrix
/// from its eigenvalues.
pub fn hermitian_cond(h: &DMatrix<C64>) -> f64 {
    let eig = h.clone().symmetric_eigenvalues();
    let hi = eig.iter().fold(0.0f64, |a, &b| a.max(b));
    let lo = eig.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Largest eigenvalue of a Hermitian positive semi-definite operator by
/// power iteration with a Rayleigh-quotient readout.
pub fn power_max_eig(n: usize, iters: usize, apply: impl Fn(&DVector<C64>) -> DVector<C64>) -> f64 {
    // deterministic start with a little structure so it is not orthogonal to
    // a DFT-aligned eigenvector
    let mut v = DVector::from_fn(n, |i, _| C64::new(1.0 + (i % 7) as f64 * 0.1, (i % 3) as f64 * 0.05));
    v /= C64::new(v.norm(), 0.0);
    let mut lambda = 0.0;
    for _ in 0..iters {
        let u = apply(&v);
        lambda = v.dotc(&u).re;
        let norm = u.norm();
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        v = u / C64::new(norm, 0.0);
    }
    lambda
}

/// Real-valued diagonal of a Hermitian matrix.
pub fn real_diagonal(h: &DMatrix<C64>) -> Vec<f64> {
    h.diagonal().iter().map(|z| z.re).collect()
}

pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}
