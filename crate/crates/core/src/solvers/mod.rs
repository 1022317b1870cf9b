//! Sparse recovery solvers.
//!
//! CG, SBL and BLRC all reduce to a weighted ridge problem per iteration,
//!
//! ```text
//! c = argmin ||y - A c||^2 + sigma_n^2 sum_i w_i |c_i|^2,
//! ```
//!
//! solved by [`posterior_update`]. They differ only in how the weights and
//! the noise level are refreshed between iterations.

mod blrc;
mod cg;
mod omp;
mod posterior;
mod prune;
mod sbl;

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::Rng as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::Dictionary;
use crate::{rng, C64};

pub use blrc::{blrc_gamma_update, solve_blrc, solve_blrc_with_init, GammaUpdate};
pub use cg::{solve_cg, solve_cg_with_init};
pub use omp::solve_omp;
pub use posterior::{posterior_update, posterior_update_with, PosteriorOptions, PosteriorState};
pub use prune::{prune, PrunedModel};
pub use sbl::{sbl_hyper_update, solve_sbl, SblHyper, SBL_C_FLOOR, SBL_TAU_CAP};

/// Floor for the learned Cauchy scale `gamma^2`.
pub const GAMMA_SQ_FLOOR: f64 = 1e-12;

/// Residues at or below this level count as an exact fit.
pub const RESIDUE_FLOOR_DB: f64 = -300.0;

/// How the condition number of the per-iteration system is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CondMode {
    /// Exact for `N <= 512`, power-iteration estimate above.
    #[default]
    Auto,
    /// Eigenvalues of the dense `N x N` system.
    Exact,
    /// Power iterations on the system and on its inverse.
    Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub init_sigma_n: f64,
    pub init_gamma: f64,
    pub init_tau: f64,
    pub cg_fixed_sigma_n: f64,
    pub cg_fixed_gamma: f64,
    /// Stop when the absolute residue change between iterations drops below this (dB).
    pub residue_tol_db: f64,
    /// SBL stops once the condition number of its system exceeds this.
    pub cond_limit: f64,
    pub cond_mode: CondMode,
    pub use_woodbury: bool,
    pub prune_threshold: Option<f64>,
    /// First iteration (1-based) at which pruning is applied.
    pub prune_start_iter: usize,
    pub omp_max_atoms: usize,
    pub omp_residue_stop_db: Option<f64>,
    pub init_c_seed: u64,
    /// Dynamic range used to report the support of a solution.
    pub dynamic_range_db: f64,
    pub record_weights: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::spa()
    }
}

impl SolverConfig {
    /// Initial values used for the 80-element sparse array experiments.
    pub fn spa() -> Self {
        Self {
            max_iters: 25,
            init_sigma_n: 1.0,
            init_gamma: 0.1,
            init_tau: 100.0,
            cg_fixed_sigma_n: 0.1,
            cg_fixed_gamma: 0.01,
            residue_tol_db: 1e-3,
            cond_limit: 1e12,
            cond_mode: CondMode::Auto,
            use_woodbury: false,
            prune_threshold: None,
            prune_start_iter: 1,
            omp_max_atoms: 20,
            omp_residue_stop_db: None,
            init_c_seed: 0,
            dynamic_range_db: 40.0,
            record_weights: false,
        }
    }

    /// Initial values for the 16-element coprime array: a larger starting
    /// Cauchy scale and OMP capped at `M - 1` atoms.
    pub fn cpa() -> Self {
        Self { init_gamma: 1.0, omp_max_atoms: 15, ..Self::spa() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("init_sigma_n", self.init_sigma_n),
            ("init_gamma", self.init_gamma),
            ("init_tau", self.init_tau),
            ("cg_fixed_sigma_n", self.cg_fixed_sigma_n),
            ("cg_fixed_gamma", self.cg_fixed_gamma),
            ("cond_limit", self.cond_limit),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if !(self.residue_tol_db >= 0.0) {
            return Err(Error::InvalidArgument("residue_tol_db must be nonnegative".into()));
        }
        if let Some(t) = self.prune_threshold {
            if !(t >= 0.0) {
                return Err(Error::InvalidArgument("prune_threshold must be nonnegative".into()));
            }
        }
        if self.omp_max_atoms == 0 {
            return Err(Error::InvalidArgument("omp_max_atoms must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn cond_exact(&self, n: usize) -> bool {
        match self.cond_mode {
            CondMode::Auto => n <= 512,
            CondMode::Exact => true,
            CondMode::Estimate => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Omp,
    Cg,
    Sbl,
    Blrc,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [SolverKind::Omp, SolverKind::Cg, SolverKind::Sbl, SolverKind::Blrc];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Omp => "omp",
            SolverKind::Cg => "cg",
            SolverKind::Sbl => "sbl",
            SolverKind::Blrc => "blrc",
        }
    }

    pub fn solve(self, y: &DVector<C64>, dict: &Dictionary, config: &SolverConfig) -> Result<SolveResult> {
        match self {
            SolverKind::Omp => solve_omp(y, dict, config),
            SolverKind::Cg => solve_cg(y, dict, config),
            SolverKind::Sbl => solve_sbl(y, dict, config),
            SolverKind::Blrc => solve_blrc(y, dict, config),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "omp" => Ok(SolverKind::Omp),
            "cg" => Ok(SolverKind::Cg),
            "sbl" => Ok(SolverKind::Sbl),
            "blrc" => Ok(SolverKind::Blrc),
            other => Err(Error::InvalidArgument(format!("unknown solver '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIters,
    IllConditioned,
    ResidueFloor,
}

/// Per-iteration diagnostics. Every column has one entry per completed
/// iteration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterTrace {
    /// `20 log10 ||y - A c_k||`.
    pub residue_db: Vec<f64>,
    pub sigma_n_est: Vec<f64>,
    /// Cauchy scale (CG, BLRC); `None` for OMP and SBL.
    pub gamma_est: Vec<Option<f64>>,
    /// `(min tau, max tau)` for SBL.
    pub tau_range: Vec<Option<(f64, f64)>>,
    /// Condition number of the matrix inverted in that iteration.
    pub cond_h: Vec<f64>,
    /// Ridge weights used in that iteration, sorted ascending.
    pub weights_sorted: Option<Vec<Vec<f64>>>,
    /// Iterations (1-based) where the `gamma^2` update hit its floor.
    pub gamma_clamped: Vec<usize>,
    /// OMP only: the column picked in each iteration.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms_selected: Vec<usize>,
}

impl IterTrace {
    pub fn len(&self) -> usize {
        self.residue_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residue_db.is_empty()
    }

    pub(crate) fn new(record_weights: bool) -> Self {
        Self { weights_sorted: record_weights.then(Vec::new), ..Self::default() }
    }

    pub(crate) fn push_weights(&mut self, w: &[f64]) {
        if let Some(ws) = self.weights_sorted.as_mut() {
            let mut s = w.to_vec();
            s.sort_by(f64::total_cmp);
            ws.push(s);
        }
    }

    /// `max w / min w` of the last recorded weight vector.
    pub fn final_weight_spread(&self) -> Option<f64> {
        let w = self.weights_sorted.as_ref()?.last()?;
        Some(w.last()? / w.first()?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub method: SolverKind,
    pub c_hat: DVector<C64>,
    pub trace: IterTrace,
    pub termination: Termination,
    pub support: Vec<usize>,
}

impl SolveResult {
    pub(crate) fn new(
        method: SolverKind,
        c_hat: DVector<C64>,
        trace: IterTrace,
        termination: Termination,
        dynamic_range_db: f64,
    ) -> Self {
        let support = support(&c_hat, dynamic_range_db);
        Self { method, c_hat, trace, termination, support }
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn final_sigma_n(&self) -> Option<f64> {
        self.trace.sigma_n_est.last().copied()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.c_hat.iter().map(|z| z.norm()).collect()
    }
}

impl Serialize for SolveResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let interleaved: Vec<f64> = self.c_hat.iter().flat_map(|z| [z.re, z.im]).collect();
        let mut s = serializer.serialize_struct("SolveResult", 5)?;
        s.serialize_field("method", &self.method)?;
        s.serialize_field("termination", &self.termination)?;
        s.serialize_field("c_hat", &interleaved)?;
        s.serialize_field("support", &self.support)?;
        s.serialize_field("trace", &self.trace)?;
        s.end()
    }
}

/// Indices with `|c_i| >= max|c| * 10^(-dynamic_range_db / 20)`.
pub fn support(c: &DVector<C64>, dynamic_range_db: f64) -> Vec<usize> {
    let max = c.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if max == 0.0 {
        return Vec::new();
    }
    let floor = max * 10f64.powf(-dynamic_range_db / 20.0);
    c.iter()
        .enumerate()
        .filter(|(_, z)| z.norm() >= floor)
        .map(|(i, _)| i)
        .collect()
}

/// Random start with real and imaginary parts uniform on `[0, 1]`.
pub fn initial_coefficients(n: usize, seed: u64) -> DVector<C64> {
    let mut r = rng::seeded(seed);
    DVector::from_fn(n, |_, _| C64::new(r.random::<f64>(), r.random::<f64>()))
}

pub(crate) fn residue_db_of(r: &DVector<C64>) -> f64 {
    let norm = r.norm();
    if norm > 0.0 {
        (20.0 * norm.log10()).max(RESIDUE_FLOOR_DB)
    } else {
        RESIDUE_FLOOR_DB
    }
}

pub(crate) fn check_shapes(y: &DVector<C64>, dict: &Dictionary) -> Result<()> {
    if y.len() != dict.m() {
        return Err(Error::InvalidArgument(format!(
            "measurement length {} does not match dictionary rows {}",
            y.len(),
            dict.m()
        )));
    }
    Ok(())
}
