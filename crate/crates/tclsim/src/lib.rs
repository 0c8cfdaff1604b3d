//! Simulator for the dissipative dynamics of few-level open quantum systems
//! under time-convolutionless (TCL) master equations with memory-carrying
//! (non-Markovian) baths of Lorentzian spectral shape.
//!
//! The physical model is a five-level photosynthetic reaction center treated
//! as a quantum heat engine: a ground state `g`, two excited donor states
//! `e1`/`e2` split by an energy gap Δ and pumped by a common hot reservoir,
//! a charge-separated state `m1` fed by a common cold reservoir, and an
//! ionized state `m2` on the work transition. Coupling two transitions to
//! one reservoir produces Fano-type noise-induced coherence between `e1`
//! and `e2`; bath memory makes every transition rate time dependent,
//! `γ(t) = γ_M (1 − e^{−κt})`, ramping from zero to the Markovian rate.
//!
//! Module layout:
//!
//! - [`spectral`]: Lorentzian spectral densities and their normalization.
//! - [`quad`]: adaptive Gauss–Kronrod and Filon-type oscillatory quadrature.
//! - [`rates`]: time-dependent transition rates — closed form, Markovian
//!   constant, and brute-force double quadrature (the independent oracle).
//! - [`dynamics`]: the five-level Liouvillian, density-matrix type, and
//!   adaptive / fixed-step Runge–Kutta integration.
//! - [`model`]: Table-driven scenario presets, unit conversion, thermal
//!   occupations, and the scenario config-file schema.
//! - [`observables`]: trajectory records, Markovian/non-Markovian comparison
//!   reports, CSV and SVG emission.
//! - [`batch`]: data-parallel execution of independent scenarios (rayon
//!   behind the `parallel` feature, sequential fallback otherwise).
//! - [`validation`]: the built-in oracle suite behind `tclsim validate`.
//! - [`cli`]: the command-line driver.

pub mod batch;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod observables;
pub mod quad;
pub mod rates;
pub mod spectral;
pub mod validation;

pub use error::{Error, Result};

use nalgebra::SMatrix;
use num_complex::Complex64;

/// Complex double, the scalar type of all density-matrix arithmetic.
pub type C64 = Complex64;

/// A 5×5 complex matrix, the concrete representation of operators and
/// states on the five-level Hilbert space.
pub type Matrix5 = SMatrix<C64, 5, 5>;

/// Number of levels in the system.
pub const DIM: usize = 5;
