//! Spectral simulator and verifier for finite-time extinction of damped
//! nonlinear Schrodinger fields on rectangular boxes.
//!
//! The model is
//!
//! ```text
//! i u_t + Lap u + a |u|^(m-1) u = f(t, x)   on (0, inf) x Omega,
//! u = 0 on the boundary,                     0 < m <= 1, Im(a) > 0,
//! ```
//!
//! with `Omega` a box in 1, 2 or 3 dimensions. For `m < 1` the damping is
//! sublinear and the field dies in finite time; the crate integrates the
//! dynamics with a Strang-split sine-spectral scheme, tracks the mass balance
//! ledger, and checks the extinction time against closed-form lower/upper
//! bounds and ordinary differential inequality envelopes.
//!
//! Modules:
//! - [`nonlinearity`]: the scalar damping kernel, its monotonicity and Holder
//!   inequalities, and the exact pointwise damping flow.
//! - [`grid`]: Dirichlet sine-spectral fields on boxes (transforms, norms,
//!   quadrature, Laplacian, interpolation ratios).
//! - [`odi`]: envelopes and oracles for `y' + 2 a y^d <= 0` and the forced
//!   variant that certifies extinction exactly at a source cutoff.
//! - [`integrator`]: Strang and implicit-midpoint steppers plus the ledger
//!   producing [`integrator::Trajectory`].
//! - [`analysis`]: mass-balance residuals, extinction-time bounds, the
//!   Gagliardo-Nirenberg constant search, and the critical-source designer.
//! - [`report`]: serializable run reports with named verdicts.
//! - [`scenario`]: run configuration files, built-in presets, and the
//!   directory-writing orchestration used by the CLI.

pub mod analysis;
pub mod error;
pub mod grid;
pub mod integrator;
pub mod nonlinearity;
pub mod odi;
pub mod report;
pub mod scenario;
pub mod source;

pub use error::{Error, Result};
