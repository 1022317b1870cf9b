use nalgebra::{DMatrix, DVector};

use super::{check_shapes, residue_db_of, IterTrace, SolveResult, SolverConfig, SolverKind, Termination};
use crate::error::{invalid, Result};
use crate::model::Dictionary;
use crate::C64;

/// Residual norms below this fraction of `||y||` count as an exact fit.
const EXACT_FIT: f64 = 1e-13;

/// Orthogonal matching pursuit with a least-squares refit after every pick.
pub fn solve_omp(y: &DVector<C64>, dict: &Dictionary, config: &SolverConfig) -> Result<SolveResult> {
    check_shapes(y, dict)?;
    if config.omp_max_atoms == 0 {
        return invalid("omp_max_atoms must be at least 1");
    }
    let max_atoms = config.omp_max_atoms.min(dict.m()).min(dict.n());
    let mut trace = IterTrace::new(false);
    let mut selected: Vec<usize> = Vec::new();
    let mut coef = DVector::<C64>::zeros(0);
    let mut r = y.clone();
    let y_norm = y.norm();
    let mut termination = Termination::MaxIters;

    if y_norm == 0.0 {
        termination = Termination::ResidueFloor;
    }
    while termination == Termination::MaxIters && selected.len() < max_atoms {
        let corr = dict.adjoint(&r);
        let pick = corr
            .iter()
            .enumerate()
            .filter(|(i, _)| !selected.contains(i))
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(i, _)| i);
        let Some(pick) = pick else { break };
        selected.push(pick);
        trace.atoms_selected.push(pick);

        let sub: DMatrix<C64> = dict.atoms().select_columns(&selected);
        let svd = sub.clone().svd(true, true);
        coef = svd.solve(y, 1e-12).map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
        r = y - &sub * &coef;

        let sv = &svd.singular_values;
        let smax = sv.max();
        let smin = sv.min();
        let dof = (dict.m() - selected.len()).max(1) as f64;
        trace.residue_db.push(residue_db_of(&r));
        trace.sigma_n_est.push((r.norm_squared() / dof).sqrt());
        trace.gamma_est.push(None);
        trace.tau_range.push(None);
        trace.cond_h.push(if smin > 0.0 { (smax / smin).powi(2) } else { f64::INFINITY });

        if r.norm() <= EXACT_FIT * y_norm {
            termination = Termination::ResidueFloor;
        } else if let Some(stop) = config.omp_residue_stop_db {
            if *trace.residue_db.last().unwrap() <= stop {
                termination = Termination::Converged;
            }
        }
    }
    let mut c = DVector::zeros(dict.n());
    for (j, &i) in selected.iter().enumerate() {
        c[i] = coef[j];
    }
    let mut res = SolveResult::new(SolverKind::Omp, c, trace, termination, config.dynamic_range_db);
    res.support.sort_unstable();
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_fourier_dictionary, ArrayGeometry};

    #[test]
    fn single_ray_one_atom() {
        let d = build_fourier_dictionary(&ArrayGeometry::full(32).unwrap());
        let mut c = DVector::zeros(32);
        c[7] = C64::new(0.6, -0.8);
        let y = d.apply(&c);
        let res = solve_omp(&y, &d, &SolverConfig::spa()).unwrap();
        assert_eq!(res.iterations(), 1);
        assert_eq!(res.support, vec![7]);
        assert_eq!(res.termination, Termination::ResidueFloor);
        assert!(res.trace.residue_db[0] <= -200.0);
        assert!((res.c_hat[7] - c[7]).norm() < 1e-12);
    }

    #[test]
    fn caps_at_m_atoms() {
        let g = ArrayGeometry::new(32, vec![0, 3, 4, 9, 20], crate::ArrayKind::Custom).unwrap();
        let d = build_fourier_dictionary(&g);
        let y = DVector::from_fn(5, |i, _| C64::new(i as f64, 1.0 - i as f64 * 0.3));
        let cfg = SolverConfig { omp_max_atoms: 20, ..SolverConfig::spa() };
        let res = solve_omp(&y, &d, &cfg).unwrap();
        assert!(res.iterations() <= 5);
        assert_eq!(res.trace.atoms_selected.len(), res.iterations());
    }

    #[test]
    fn zero_measurement() {
        let d = build_fourier_dictionary(&ArrayGeometry::full(8).unwrap());
        let res = solve_omp(&DVector::zeros(8), &d, &SolverConfig::spa()).unwrap();
        assert_eq!(res.iterations(), 0);
        assert!(res.support.is_empty());
    }
}
