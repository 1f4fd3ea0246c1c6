//! Core kernels for `kgli`, a numerical laboratory that walks the full chain
//! from binned particle-detection data to the gauge-coupled Klein-Gordon
//! equation and back:
//!
//! * [`spacetime`] — Minkowski primitives, uniform space-time grids, fields,
//!   and discrete differential operators;
//! * [`experiment`] — event binning, count datasets, and seeded categorical
//!   event sampling;
//! * [`inference`] — evidence (log-likelihood-ratio) and Fisher-information
//!   functionals over binned and continuum densities;
//! * [`hje`] — four-velocity fields, the field-strength tensor, gauge shifts,
//!   and relativistic Hamilton-Jacobi residuals;
//! * [`functionals`] — the constrained variational functionals, the polar map
//!   between (density, action) pairs and complex fields, and a first-order
//!   minimizer;
//! * [`solver`] — an explicit 1+1D finite-difference Klein-Gordon solver with
//!   electromagnetic potentials, plus analytic oracles and diagnostics;
//! * [`io`] — the CSV/JSON file formats shared with the command-line frontend.
//!
//! Everything is deterministic: reductions over grid points use a fixed
//! chunked summation order (see [`exec`]), and all randomness flows from
//! explicit 64-bit seeds.

pub mod exec;
pub mod experiment;
pub mod functionals;
pub mod hje;
pub mod inference;
pub mod io;
pub mod solver;
pub mod spacetime;
pub mod synth;

pub use spacetime::{FourVector, PhysicalParams, SpacetimeGrid};
