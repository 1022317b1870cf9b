use nalgebra::DVector;

use super::PosteriorState;
use crate::error::{invalid, Error, Result};
use crate::model::Dictionary;
use crate::C64;

/// Dictionary restricted to the columns that survived pruning.
#[derive(Debug, Clone)]
pub struct PrunedModel {
    pub dict: Dictionary,
    /// `index_map[j]` is the column of the input dictionary kept as column `j`.
    pub index_map: Vec<usize>,
    pub n_full: usize,
}

impl PrunedModel {
    /// Re-embeds a reduced solution into a length-`n_full` vector with zeros
    /// at pruned positions.
    pub fn embed(&self, reduced: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(self.n_full);
        for (j, &i) in self.index_map.iter().enumerate() {
            out[i] = reduced[j];
        }
        out
    }
}

/// Drops columns with `|c_i| < threshold`.
pub fn prune(state: &PosteriorState, dict: &Dictionary, threshold: f64) -> Result<PrunedModel> {
    if !(threshold >= 0.0) {
        return invalid(format!("prune threshold must be nonnegative, got {threshold}"));
    }
    if state.c.len() != dict.n() {
        return invalid("posterior length does not match dictionary");
    }
    let keep = kept_columns(&state.c, threshold);
    if keep.is_empty() {
        return Err(Error::EmptyModel);
    }
    let dict = if keep.len() == dict.n() { dict.clone() } else { dict.restrict(&keep) };
    Ok(PrunedModel { dict, index_map: keep, n_full: state.c.len() })
}

fn kept_columns(c: &DVector<C64>, threshold: f64) -> Vec<usize> {
    c.iter().enumerate().filter(|(_, z)| z.norm() >= threshold).map(|(i, _)| i).collect()
}

/// Active columns of an iterative solve, with the matching restricted
/// dictionary once anything has been pruned.
pub(crate) struct ActiveSet {
    n_full: usize,
    columns: Vec<usize>,
    reduced: Option<Dictionary>,
}

impl ActiveSet {
    pub fn new(n_full: usize) -> Self {
        Self { n_full, columns: (0..n_full).collect(), reduced: None }
    }

    pub fn dict<'a>(&'a self, full: &'a Dictionary) -> &'a Dictionary {
        self.reduced.as_ref().unwrap_or(full)
    }

    pub fn embed(&self, reduced: &DVector<C64>) -> DVector<C64> {
        if self.reduced.is_none() {
            return reduced.clone();
        }
        let mut out = DVector::zeros(self.n_full);
        for (j, &i) in self.columns.iter().enumerate() {
            out[i] = reduced[j];
        }
        out
    }

    /// Prunes by `|c_j| < threshold`; returns the kept positions within the
    /// current active set so callers can shrink per-column state.
    pub fn prune(&mut self, full: &Dictionary, c: &DVector<C64>, threshold: f64) -> Result<Option<Vec<usize>>> {
        let keep = kept_columns(c, threshold);
        if keep.is_empty() {
            return Err(Error::EmptyModel);
        }
        if keep.len() == self.columns.len() {
            return Ok(None);
        }
        self.columns = keep.iter().map(|&j| self.columns[j]).collect();
        self.reduced = Some(full.restrict(&self.columns));
        Ok(Some(keep))
    }
}

pub(crate) fn gather<T: Copy>(v: &[T], keep: &[usize]) -> Vec<T> {
    keep.iter().map(|&j| v[j]).collect()
}

pub(crate) fn gather_vec(v: &DVector<C64>, keep: &[usize]) -> DVector<C64> {
    DVector::from_iterator(keep.len(), keep.iter().map(|&j| v[j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_fourier_dictionary, ArrayGeometry};

    fn state(c: Vec<C64>) -> PosteriorState {
        let n = c.len();
        PosteriorState {
            c: DVector::from_vec(c),
            gamma_diag: vec![1.0; n],
            gamma: None,
            weights: vec![1.0; n],
            trace_gram_gamma: 0.0,
            cond_h: None,
        }
    }

    #[test]
    fn zero_threshold_is_identity() {
        let d = build_fourier_dictionary(&ArrayGeometry::full(3).unwrap());
        let st = state(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.5, 0.0)]);
        let p = prune(&st, &d, 0.0).unwrap();
        assert_eq!(p.index_map, vec![0, 1, 2]);
    }

    #[test]
    fn drops_small_columns() {
        let d = build_fourier_dictionary(&ArrayGeometry::full(3).unwrap());
        let st = state(vec![C64::new(1.0, 0.0), C64::new(1e-9, 0.0), C64::new(0.5, 0.0)]);
        let p = prune(&st, &d, 1e-3).unwrap();
        assert_eq!(p.index_map, vec![0, 2]);
        assert_eq!(p.dict.n(), 2);
        let full = p.embed(&DVector::from_vec(vec![C64::new(2.0, 0.0), C64::new(3.0, 0.0)]));
        assert_eq!(full[1], C64::new(0.0, 0.0));
        assert_eq!(full[2], C64::new(3.0, 0.0));
        assert_eq!(p.dict.atoms().column(1), d.atoms().column(2));
    }

    #[test]
    fn pruning_everything_is_an_error() {
        let d = build_fourier_dictionary(&ArrayGeometry::full(2).unwrap());
        let st = state(vec![C64::new(1e-6, 0.0); 2]);
        assert_eq!(prune(&st, &d, 1.0).unwrap_err(), Error::EmptyModel);
    }

    #[test]
    fn nested_pruning_composes_indices() {
        let d = build_fourier_dictionary(&ArrayGeometry::full(5).unwrap());
        let mut a = ActiveSet::new(5);
        let c1 = DVector::from_vec(vec![1.0, 0.0, 1.0, 1.0, 1.0].into_iter().map(|x| C64::new(x, 0.0)).collect());
        assert_eq!(a.prune(&d, &c1, 0.5).unwrap(), Some(vec![0, 2, 3, 4]));
        let c2 = DVector::from_vec(vec![1.0, 1.0, 0.0, 1.0].into_iter().map(|x| C64::new(x, 0.0)).collect());
        a.prune(&d, &c2, 0.5).unwrap();
        assert_eq!(a.columns, vec![0, 2, 4]);
        let e = a.embed(&DVector::from_element(3, C64::new(7.0, 0.0)));
        assert_eq!(e.iter().filter(|z| z.re == 7.0).count(), 3);
        assert_eq!(e[3], C64::new(0.0, 0.0));
    }
}
