use nalgebra::DVector;

use super::blrc::sigma_floor;
use super::prune::{gather, gather_vec, ActiveSet};
use super::{
    check_shapes, posterior_update_with, residue_db_of, IterTrace, PosteriorOptions, SolveResult, SolverConfig,
    SolverKind, Termination,
};
use crate::error::{invalid, Error, Result};
use crate::model::Dictionary;
use crate::C64;

/// `|c_i|^2` below this counts as zero in the precision update.
pub const SBL_C_FLOOR: f64 = 1e-30;
/// Largest precision a coefficient may reach.
pub const SBL_TAU_CAP: f64 = 1e30;

#[derive(Debug, Clone, PartialEq)]
pub struct SblHyper {
    pub tau: Vec<f64>,
    pub sigma_n_sq: f64,
}

/// Precision and noise updates:
///
/// ```text
/// sigma_n^2 = ||y - A c||^2 / (M - N + sum_i tau_i Gamma_ii)
/// tau_i     = (1 - tau_i Gamma_ii) / |c_i|^2
/// ```
pub fn sbl_hyper_update(
    c: &DVector<C64>,
    gamma_diag: &[f64],
    tau_prev: &[f64],
    y: &DVector<C64>,
    dict: &Dictionary,
) -> Result<SblHyper> {
    let n = dict.n();
    if c.len() != n || gamma_diag.len() != n || tau_prev.len() != n {
        return invalid(format!(
            "lengths c={}, gamma={}, tau={} for {} columns",
            c.len(),
            gamma_diag.len(),
            tau_prev.len(),
            n
        ));
    }
    check_shapes(y, dict)?;
    // sum_i (1 - tau_i Gamma_ii) is the effective number of fitted parameters
    let dof: f64 = tau_prev.iter().zip(gamma_diag).map(|(t, g)| 1.0 - t * g).sum();
    let denom = (dict.m() as f64 - dof).max(f64::EPSILON);
    let r = y - dict.apply(c);
    let sigma_n_sq = r.norm_squared() / denom;
    let tau = c
        .iter()
        .zip(tau_prev.iter().zip(gamma_diag))
        .map(|(z, (t, g))| {
            let p = z.norm_sqr();
            let num = 1.0 - t * g;
            if p < SBL_C_FLOOR || num <= 0.0 {
                SBL_TAU_CAP
            } else {
                (num / p).min(SBL_TAU_CAP)
            }
        })
        .collect();
    Ok(SblHyper { tau, sigma_n_sq })
}

pub fn solve_sbl(y: &DVector<C64>, dict: &Dictionary, config: &SolverConfig) -> Result<SolveResult> {
    config.validate()?;
    check_shapes(y, dict)?;
    let opts = PosteriorOptions {
        use_woodbury: config.use_woodbury,
        need_full_gamma: false,
        cond: Some(config.cond_exact(dict.n())),
    };
    let sigma_sq_floor = sigma_floor(y, dict.m());

    let mut active = ActiveSet::new(dict.n());
    let mut tau = vec![config.init_tau; dict.n()];
    let mut sigma_sq = config.init_sigma_n.powi(2);
    let mut c = DVector::zeros(dict.n());
    let mut trace = IterTrace::new(config.record_weights);
    let mut termination = Termination::MaxIters;

    for k in 1..=config.max_iters {
        let d = active.dict(dict);
        let st = match posterior_update_with(d, y, &tau, sigma_sq, opts) {
            Ok(st) => st,
            Err(Error::IllConditioned { .. }) => {
                termination = Termination::IllConditioned;
                break;
            }
            Err(e) => return Err(e),
        };
        let hyper = sbl_hyper_update(&st.c, &st.gamma_diag, &tau, y, d)?;
        let r = y - d.apply(&st.c);
        let cond = st.cond_h.unwrap_or(f64::NAN);

        trace.residue_db.push(residue_db_of(&r));
        trace.sigma_n_est.push(hyper.sigma_n_sq.sqrt());
        trace.gamma_est.push(None);
        let lo = hyper.tau.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = hyper.tau.iter().copied().fold(0.0, f64::max);
        trace.tau_range.push(Some((lo, hi)));
        trace.cond_h.push(cond);
        trace.push_weights(&tau);

        c = st.c;
        tau = hyper.tau;
        sigma_sq = hyper.sigma_n_sq.max(sigma_sq_floor);

        if cond > config.cond_limit {
            termination = Termination::IllConditioned;
            break;
        }
        if tau.iter().all(|&t| t >= SBL_TAU_CAP) {
            termination = Termination::Converged;
            break;
        }
        if let Some(t) = config.prune_threshold {
            if k >= config.prune_start_iter {
                if let Some(keep) = active.prune(dict, &c, t)? {
                    c = gather_vec(&c, &keep);
                    tau = gather(&tau, &keep);
                }
            }
        }
    }
    let c_full = active.embed(&c);
    Ok(SolveResult::new(SolverKind::Sbl, c_full, trace, termination, config.dynamic_range_db))
}
