use nalgebra::DVector;

use super::prune::{gather_vec, ActiveSet};
use super::{
    check_shapes, initial_coefficients, posterior_update_with, residue_db_of, IterTrace, PosteriorOptions,
    SolveResult, SolverConfig, SolverKind, Termination, GAMMA_SQ_FLOOR,
};
use crate::error::{invalid, Error, Result};
use crate::model::Dictionary;
use crate::C64;

/// One fixed-point step for the Cauchy scale `gamma^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaUpdate {
    pub gamma_sq: f64,
    /// The raw step was at or below [`GAMMA_SQ_FLOOR`] and was clamped.
    pub clamped: bool,
}

/// `(2/N) sum_i [eta_i / (1 + eta_i/g) - (xi_i/g) / (1 + eta_i/g)^3]` with
/// `g = gamma_prev_sq`, clamped below at [`GAMMA_SQ_FLOOR`].
pub fn blrc_gamma_update(eta: &[f64], xi: &[f64], gamma_prev_sq: f64) -> Result<GammaUpdate> {
    if eta.len() != xi.len() {
        return invalid(format!("eta has {} entries, xi has {}", eta.len(), xi.len()));
    }
    if eta.is_empty() {
        return invalid("empty eta");
    }
    if !(gamma_prev_sq > 0.0) {
        return invalid(format!("previous gamma^2 must be positive, got {gamma_prev_sq}"));
    }
    let g = gamma_prev_sq;
    let sum: f64 = eta
        .iter()
        .zip(xi)
        .map(|(&e, &x)| {
            let q = 1.0 + e / g;
            e / q - (x / g) / (q * q * q)
        })
        .sum();
    let raw = 2.0 * sum / eta.len() as f64;
    if raw > GAMMA_SQ_FLOOR && raw.is_finite() {
        Ok(GammaUpdate { gamma_sq: raw, clamped: false })
    } else if raw.is_nan() {
        Err(Error::IllConditioned { cond: f64::NAN })
    } else if raw == f64::INFINITY {
        Ok(GammaUpdate { gamma_sq: f64::MAX, clamped: true })
    } else {
        Ok(GammaUpdate { gamma_sq: GAMMA_SQ_FLOOR, clamped: true })
    }
}

pub fn solve_blrc(y: &DVector<C64>, dict: &Dictionary, config: &SolverConfig) -> Result<SolveResult> {
    let c0 = initial_coefficients(dict.n(), config.init_c_seed);
    solve_blrc_with_init(y, dict, config, c0)
}

pub fn solve_blrc_with_init(
    y: &DVector<C64>,
    dict: &Dictionary,
    config: &SolverConfig,
    c0: DVector<C64>,
) -> Result<SolveResult> {
    let sigma_sq = config.init_sigma_n.powi(2);
    let gamma_sq = config.init_gamma.powi(2);
    run_cauchy(y, dict, config, c0, sigma_sq, gamma_sq, true)
}

/// Reweighting loop with weights `2 / (gamma^2 + |c_i|^2)`. With `learn` the
/// scale and the noise level are refreshed each iteration (BLRC), otherwise
/// they stay fixed (CG).
pub(crate) fn run_cauchy(
    y: &DVector<C64>,
    dict: &Dictionary,
    config: &SolverConfig,
    c0: DVector<C64>,
    mut sigma_sq: f64,
    mut gamma_sq: f64,
    learn: bool,
) -> Result<SolveResult> {
    config.validate()?;
    check_shapes(y, dict)?;
    if c0.len() != dict.n() {
        return invalid(format!("initial estimate has {} entries for {} columns", c0.len(), dict.n()));
    }
    let kind = if learn { SolverKind::Blrc } else { SolverKind::Cg };
    let m = dict.m() as f64;
    let sigma_sq_floor = sigma_floor(y, dict.m());
    let opts = PosteriorOptions {
        use_woodbury: config.use_woodbury,
        need_full_gamma: false,
        cond: Some(config.cond_exact(dict.n())),
    };

    let mut active = ActiveSet::new(dict.n());
    let mut c = c0;
    let mut trace = IterTrace::new(config.record_weights);
    let mut termination = Termination::MaxIters;

    for k in 1..=config.max_iters {
        let d = active.dict(dict);
        let w: Vec<f64> = c.iter().map(|z| 2.0 / (gamma_sq + z.norm_sqr())).collect();
        let st = match posterior_update_with(d, y, &w, sigma_sq, opts) {
            Ok(st) => st,
            Err(Error::IllConditioned { .. }) => {
                termination = Termination::IllConditioned;
                break;
            }
            Err(e) => return Err(e),
        };
        let r = y - d.apply(&st.c);
        if learn {
            let eta: Vec<f64> = st.c.iter().zip(&st.gamma_diag).map(|(z, g)| g + z.norm_sqr()).collect();
            let xi: Vec<f64> = st
                .c
                .iter()
                .zip(&st.gamma_diag)
                .map(|(z, g)| 4.0 * z.norm_sqr() * g + 2.0 * g * g)
                .collect();
            let up = blrc_gamma_update(&eta, &xi, gamma_sq)?;
            gamma_sq = up.gamma_sq;
            if up.clamped {
                trace.gamma_clamped.push(k);
            }
            sigma_sq = ((r.norm_squared() + st.trace_gram_gamma) / m).max(sigma_sq_floor);
        }
        c = st.c;

        trace.residue_db.push(residue_db_of(&r));
        trace.sigma_n_est.push(sigma_sq.sqrt());
        trace.gamma_est.push(Some(gamma_sq.sqrt()));
        trace.tau_range.push(None);
        trace.cond_h.push(st.cond_h.unwrap_or(f64::NAN));
        trace.push_weights(&w);

        if k >= 2 {
            let prev = trace.residue_db[k - 2];
            if (trace.residue_db[k - 1] - prev).abs() < config.residue_tol_db {
                termination = Termination::Converged;
                break;
            }
        }
        if let Some(t) = config.prune_threshold {
            if k >= config.prune_start_iter {
                if let Some(keep) = active.prune(dict, &c, t)? {
                    c = gather_vec(&c, &keep);
                }
            }
        }
    }
    let c_full = active.embed(&c);
    Ok(SolveResult::new(kind, c_full, trace, termination, config.dynamic_range_db))
}

/// Smallest noise variance the learned updates may reach, relative to the
/// measurement energy.
pub(crate) fn sigma_floor(y: &DVector<C64>, m: usize) -> f64 {
    (1e-30 * y.norm_squared() / m.max(1) as f64).max(1e-300)
}
