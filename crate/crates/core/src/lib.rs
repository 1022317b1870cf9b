//! Single-snapshot sparse spectrum recovery.
//!
//! The crate recovers a sparse complex spectrum `c` from measurements
//! `y = A c + noise`, where `A` is a partial Fourier dictionary sampled by a
//! sparse or coprime array. Four recovery methods share one weighted-ridge
//! posterior kernel:
//!
//! * orthogonal matching pursuit ([`solvers::solve_omp`]),
//! * Cauchy-Gaussian MAP with fixed hyper-parameters ([`solvers::solve_cg`]),
//! * sparse Bayesian learning ([`solvers::solve_sbl`]),
//! * Bayesian linear regression with a Cauchy prior and learned scale and
//!   noise level ([`solvers::solve_blrc`]).
//!
//! [`analysis`] holds metrics, the null-space penalty landscape and numeric
//! checks of the moment identities the solvers rely on. [`radar`] turns a
//! point-scatterer FMCW scene into ADC samples and back into a range-azimuth
//! image.

pub mod analysis;
pub mod error;
pub mod linalg;
pub mod model;
pub mod radar;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use model::{ArrayGeometry, ArrayKind, Dictionary, Measurement, Ray};
pub use num_complex::Complex64 as C64;
pub use solvers::{SolveResult, SolverConfig, SolverKind, Termination};
