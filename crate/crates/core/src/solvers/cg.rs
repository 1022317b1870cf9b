use nalgebra::DVector;

use super::blrc::run_cauchy;
use super::{initial_coefficients, SolveResult, SolverConfig};
use crate::error::Result;
use crate::model::Dictionary;
use crate::C64;

/// Cauchy-Gaussian MAP estimate with fixed `sigma_n` and `gamma`.
pub fn solve_cg(y: &DVector<C64>, dict: &Dictionary, config: &SolverConfig) -> Result<SolveResult> {
    let c0 = initial_coefficients(dict.n(), config.init_c_seed);
    solve_cg_with_init(y, dict, config, c0)
}

pub fn solve_cg_with_init(
    y: &DVector<C64>,
    dict: &Dictionary,
    config: &SolverConfig,
    c0: DVector<C64>,
) -> Result<SolveResult> {
    let sigma_sq = config.cg_fixed_sigma_n.powi(2);
    let gamma_sq = config.cg_fixed_gamma.powi(2);
    run_cauchy(y, dict, config, c0, sigma_sq, gamma_sq, false)
}
