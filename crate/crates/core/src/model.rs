//! Dictionaries, array geometries and synthetic multi-ray measurements.
//!
//! Frequencies are normalized to cycles per grid step, so a ray at `freq`
//! contributes `exp(j 2 pi freq i)` at element position `i` and grid column
//! `k` of an `N`-point dictionary sits at `k / N`.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng;
use crate::C64;

/// One complex exponential component of the synthetic signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub freq: f64,
    pub amp: f64,
    pub phase: f64,
}

impl Ray {
    pub fn new(freq: f64, amp: f64, phase: f64) -> Self {
        Self { freq, amp, phase }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.freq) {
            return invalid(format!("ray frequency {} outside [0, 1)", self.freq));
        }
        if !(self.amp >= 0.0) {
            return invalid(format!("ray amplitude {} is negative", self.amp));
        }
        Ok(())
    }

    /// Complex coefficient `amp * exp(j phase)`.
    pub fn coefficient(&self) -> C64 {
        C64::from_polar(self.amp, self.phase)
    }

    /// Grid bin nearest to this ray's frequency on an `n_grid`-point grid.
    pub fn nearest_bin(&self, n_grid: usize) -> usize {
        ((self.freq * n_grid as f64).round() as usize) % n_grid
    }
}

pub const SIX_RAY_FREQS: [f64; 6] = [0.1212, 0.1413, 0.3132, 0.331, 0.41, 0.465];
pub const SIX_RAY_AMPS: [f64; 6] = [1.0, 0.9254, 0.7331, 0.5678, 0.6, 0.8];
pub const SIX_RAY_PHASES: [f64; 6] = [5.1191, 5.6913, 0.7979, 5.7389, 3.9732, 0.6129];

/// The six-ray benchmark scene at its off-grid frequencies.
pub fn six_rays() -> Vec<Ray> {
    (0..6)
        .map(|l| Ray::new(SIX_RAY_FREQS[l], SIX_RAY_AMPS[l], SIX_RAY_PHASES[l]))
        .collect()
}

/// The six-ray benchmark snapped to the nearest bins of an `n_grid` grid.
pub fn six_rays_on_grid(n_grid: usize) -> Vec<Ray> {
    six_rays()
        .into_iter()
        .map(|r| Ray::new(r.nearest_bin(n_grid) as f64 / n_grid as f64, r.amp, r.phase))
        .collect()
}

/// Length-`n_grid` spectrum with each ray's coefficient at its nearest bin.
pub fn rays_to_spectrum(rays: &[Ray], n_grid: usize) -> DVector<C64> {
    let mut c = DVector::zeros(n_grid);
    for r in rays {
        c[r.nearest_bin(n_grid)] += r.coefficient();
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayKind {
    Full,
    Spa,
    Cpa,
    Custom,
}

/// Element positions of an array on an `n_grid`-point half-wavelength grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    n_grid: usize,
    indices: Vec<usize>,
    kind: ArrayKind,
}

impl ArrayGeometry {
    pub fn new(n_grid: usize, indices: Vec<usize>, kind: ArrayKind) -> Result<Self> {
        if indices.is_empty() {
            return invalid("array geometry needs at least one element");
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("array indices must be strictly increasing");
        }
        if let Some(&last) = indices.last() {
            if last >= n_grid {
                return invalid(format!("array index {last} outside grid of size {n_grid}"));
            }
        }
        Ok(Self { n_grid, indices, kind })
    }

    pub fn full(n_grid: usize) -> Result<Self> {
        if n_grid == 0 {
            return invalid("grid size must be positive");
        }
        Self::new(n_grid, (0..n_grid).collect(), ArrayKind::Full)
    }

    pub fn n_grid(&self) -> usize {
        self.n_grid
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn kind(&self) -> ArrayKind {
        self.kind
    }

    /// Number of elements `M`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn aperture(&self) -> usize {
        self.indices.last().map_or(0, |&i| i + 1)
    }
}

/// Random sparse array: `m` distinct grid positions, always including 0.
pub fn make_sparse_array(n_grid: usize, m: usize, seed: u64) -> Result<ArrayGeometry> {
    if m == 0 || m > n_grid {
        return invalid(format!("sparse array needs 1 <= m <= n_grid, got m={m}, n_grid={n_grid}"));
    }
    if m == n_grid {
        return ArrayGeometry::full(n_grid);
    }
    let mut rng = rng::seeded(seed);
    let mut indices: Vec<usize> = sample(&mut rng, n_grid - 1, m - 1)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    indices.push(0);
    indices.sort_unstable();
    ArrayGeometry::new(n_grid, indices, ArrayKind::Spa)
}

/// Coprime array: union of `{0, q, .., (p-1)q}` and `{0, p, .., (q-1)p}`.
pub fn make_coprime_array(p: usize, q: usize, n_grid: usize) -> Result<ArrayGeometry> {
    if p == 0 || q == 0 {
        return invalid("coprime factors must be positive");
    }
    if gcd(p, q) != 1 {
        return invalid(format!("({p}, {q}) are not coprime"));
    }
    let mut indices: Vec<usize> = (0..p).map(|i| i * q).chain((0..q).map(|i| i * p)).collect();
    indices.sort_unstable();
    indices.dedup();
    ArrayGeometry::new(n_grid, indices, ArrayKind::Cpa)
        .map_err(|_| crate::Error::InvalidArgument(format!("coprime array ({p}, {q}) does not fit a grid of {n_grid}")))
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Clone)]
struct FourierPlan {
    indices: Vec<usize>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Complex design matrix `A` (M x N) with grid metadata.
///
/// A dictionary built from an [`ArrayGeometry`] is a row-subsampled DFT
/// matrix; products with it and the weighted Gram matrices the solvers need
/// are then evaluated with FFTs. Dictionaries built from an explicit matrix
/// use dense products throughout.
#[derive(Clone)]
pub struct Dictionary {
    atoms: DMatrix<C64>,
    geometry: Option<ArrayGeometry>,
    grid_freqs: Vec<f64>,
    plan: Option<FourierPlan>,
    gram: OnceLock<DMatrix<C64>>,
}

impl fmt::Debug for Dictionary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dictionary")
            .field("m", &self.m())
            .field("n", &self.n())
            .field("geometry", &self.geometry)
            .finish()
    }
}

/// `atoms[r][k] = exp(j 2 pi k indices[r] / N)`.
pub fn build_fourier_dictionary(geometry: &ArrayGeometry) -> Dictionary {
    let n = geometry.n_grid();
    let atoms = DMatrix::from_fn(geometry.len(), n, |r, k| {
        // reduce the exponent mod N so large grids keep full phase accuracy
        let e = (k * geometry.indices()[r]) % n;
        C64::from_polar(1.0, TAU * e as f64 / n as f64)
    });
    let mut planner = FftPlanner::new();
    let plan = FourierPlan {
        indices: geometry.indices().to_vec(),
        forward: planner.plan_fft_forward(n),
        inverse: planner.plan_fft_inverse(n),
    };
    Dictionary {
        atoms,
        geometry: Some(geometry.clone()),
        grid_freqs: (0..n).map(|k| k as f64 / n as f64).collect(),
        plan: Some(plan),
        gram: OnceLock::new(),
    }
}

impl Dictionary {
    /// Dense dictionary from an explicit matrix; grid frequencies are `k/N`.
    pub fn from_matrix(atoms: DMatrix<C64>) -> Self {
        let n = atoms.ncols();
        Self {
            atoms,
            geometry: None,
            grid_freqs: (0..n).map(|k| k as f64 / n.max(1) as f64).collect(),
            plan: None,
            gram: OnceLock::new(),
        }
    }

    pub fn m(&self) -> usize {
        self.atoms.nrows()
    }

    pub fn n(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn atoms(&self) -> &DMatrix<C64> {
        &self.atoms
    }

    pub fn geometry(&self) -> Option<&ArrayGeometry> {
        self.geometry.as_ref()
    }

    pub fn grid_freqs(&self) -> &[f64] {
        &self.grid_freqs
    }

    /// Whether products run through the FFT fast path.
    pub fn is_fourier(&self) -> bool {
        self.plan.is_some()
    }

    /// Drops the FFT fast path; products become dense matrix products.
    pub fn to_dense(&self) -> Self {
        let mut d = Self::from_matrix(self.atoms.clone());
        d.grid_freqs = self.grid_freqs.clone();
        d
    }

    /// Dense dictionary keeping only the given columns, in order.
    pub fn restrict(&self, columns: &[usize]) -> Self {
        let atoms = self.atoms.select_columns(columns);
        let mut d = Self::from_matrix(atoms);
        d.grid_freqs = columns.iter().map(|&k| self.grid_freqs[k]).collect();
        d
    }

    /// `A x`.
    pub fn apply(&self, x: &DVector<C64>) -> DVector<C64> {
        match &self.plan {
            Some(plan) => {
                let mut buf: Vec<C64> = x.iter().copied().collect();
                plan.inverse.process(&mut buf);
                DVector::from_iterator(plan.indices.len(), plan.indices.iter().map(|&i| buf[i]))
            }
            None => &self.atoms * x,
        }
    }

    /// `A^H v`.
    pub fn adjoint(&self, v: &DVector<C64>) -> DVector<C64> {
        match &self.plan {
            Some(plan) => {
                let mut buf = vec![C64::new(0.0, 0.0); self.n()];
                for (&i, &val) in plan.indices.iter().zip(v.iter()) {
                    buf[i] += val;
                }
                plan.forward.process(&mut buf);
                DVector::from_vec(buf)
            }
            None => self.atoms.ad_mul(v),
        }
    }

    /// `A diag(d) A^H`, an M x M Hermitian matrix.
    pub fn weighted_gram(&self, d: &[f64]) -> DMatrix<C64> {
        match &self.plan {
            Some(plan) => {
                let n = self.n();
                let mut g: Vec<C64> = d.iter().map(|&x| C64::new(x, 0.0)).collect();
                plan.inverse.process(&mut g);
                let idx = &plan.indices;
                DMatrix::from_fn(idx.len(), idx.len(), |r, s| g[(idx[r] + n - idx[s]) % n])
            }
            None => {
                let mut scaled = self.atoms.clone();
                for (k, mut col) in scaled.column_iter_mut().enumerate() {
                    col *= C64::new(d[k], 0.0);
                }
                scaled * self.atoms.adjoint()
            }
        }
    }

    /// `a_k^H P a_k` for every column `k`, for a Hermitian M x M matrix `P`.
    pub fn quad_diag(&self, p: &DMatrix<C64>) -> Vec<f64> {
        match &self.plan {
            Some(plan) => {
                let n = self.n();
                let idx = &plan.indices;
                let mut h = vec![C64::new(0.0, 0.0); n];
                for s in 0..idx.len() {
                    for r in 0..idx.len() {
                        h[(idx[s] + n - idx[r]) % n] += p[(r, s)];
                    }
                }
                plan.inverse.process(&mut h);
                h.into_iter().map(|z| z.re).collect()
            }
            None => {
                let pa = p * &self.atoms;
                self.atoms
                    .column_iter()
                    .zip(pa.column_iter())
                    .map(|(a, pa)| a.dotc(&pa).re)
                    .collect()
            }
        }
    }

    /// `A^H A`, computed once and cached.
    pub fn gram(&self) -> &DMatrix<C64> {
        self.gram.get_or_init(|| match &self.plan {
            Some(plan) => {
                let n = self.n();
                let mut u = vec![C64::new(0.0, 0.0); n];
                for &i in &plan.indices {
                    u[i] += C64::new(1.0, 0.0);
                }
                // u[delta] = sum_r exp(j 2 pi delta idx_r / N)
                plan.inverse.process(&mut u);
                DMatrix::from_fn(n, n, |k, l| u[(l + n - k) % n])
            }
            None => self.atoms.ad_mul(&self.atoms),
        })
    }
}

/// Observed snapshot `y` together with the scene that produced it.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub y: DVector<C64>,
    pub geometry: ArrayGeometry,
    pub truth: Option<Vec<Ray>>,
    pub noise_sigma_true: Option<f64>,
}

/// Circularly-symmetric complex Gaussian vector with `E|e_r|^2 = sigma^2`.
pub fn complex_noise(len: usize, sigma: f64, rng: &mut rng::Rng) -> DVector<C64> {
    let s = sigma / std::f64::consts::SQRT_2;
    DVector::from_fn(len, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(s * re, s * im)
    })
}

/// `y[r] = sum_l amp_l exp(j(2 pi freq_l indices[r] + phase_l)) + noise[r]`.
pub fn synth_ray_signal(
    rays: &[Ray],
    geometry: &ArrayGeometry,
    noise_sigma: f64,
    seed: u64,
) -> Result<Measurement> {
    if !(noise_sigma >= 0.0) {
        return invalid(format!("noise sigma {noise_sigma} is negative"));
    }
    for r in rays {
        r.validate()?;
    }
    let mut y = DVector::from_iterator(
        geometry.len(),
        geometry.indices().iter().map(|&i| {
            rays.iter()
                .map(|r| {
                    // keep the phase argument small for long apertures
                    let cycles = (r.freq * i as f64).fract();
                    C64::from_polar(r.amp, TAU * cycles + r.phase)
                })
                .sum::<C64>()
        }),
    );
    if noise_sigma > 0.0 {
        let mut rng = rng::seeded(seed);
        y += complex_noise(geometry.len(), noise_sigma, &mut rng);
    }
    Ok(Measurement {
        y,
        geometry: geometry.clone(),
        truth: Some(rays.to_vec()),
        noise_sigma_true: Some(noise_sigma),
    })
}
