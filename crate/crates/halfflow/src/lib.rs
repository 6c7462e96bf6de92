//! Numerical laboratory for the half-harmonic map heat flow into spheres,
//! `∂ₜu + (−Δ)^{1/2}u = u|d_{1/2}u|²`, on a periodic domain with rough
//! initial data.
//!
//! The crate is organised around the analytic objects of the problem:
//!
//! * [`grid`] — periodic spatial discretization, vector-valued fields,
//!   graded time meshes and space-time fields;
//! * [`spectral`] — Fourier transforms, the fractional Laplacian and the
//!   Poisson semigroup as exact multipliers, closed-form Poisson kernels,
//!   spectral gradients and the half-Dirichlet energy;
//! * [`fracgrad`] — the off-diagonal fractional-gradient calculus
//!   (pointwise moduli `|d_{1/2}u|²`, annulus restrictions, off-diagonal
//!   inner products);
//! * [`norms`] — Carleson-type seminorm estimators (`𝒜_T`, `X_T`, `Y_T`,
//!   `Q₀`, BMO, discrete Besov) and the Fubini tail oracle;
//! * [`solver`] — the cutoff nonlinearity, the Duhamel operator, Picard
//!   iteration, a marching exponential integrator and solution diagnostics;
//! * [`experiments`] — canonical initial data, analytic oracles,
//!   self-similarity and expander checks, and the embedding study;
//! * [`cli`] — configuration parsing and experiment orchestration.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod fracgrad;
pub mod grid;
pub mod norms;
pub mod solver;
pub mod spectral;
pub mod validate;

pub use error::{Error, Result};
