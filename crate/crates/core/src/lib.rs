//! Numerical laboratory for a trapped one-dimensional Bose gas with
//! two-body and attractive three-body interactions.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`] – periodic spectral grid, fields, quadrature and FFT derivatives.
//! * [`potentials`] – trap, the two- and three-body kernels and their
//!   `N`-dependent rescalings.
//! * [`functionals`] – cubic–quintic NLS and Hartree energies and gradients.
//! * [`gns`] – closed-form reference objects (`Q₀`, the critical strength,
//!   trap moments) and certification routines.
//! * [`solver`] – normalized gradient flow for constrained minimization and
//!   the existence phase diagram.
//! * [`collapse`] – collapse regimes, blow-up sweeps and rate fitting.
//! * [`manybody`] – exact diagonalization of the `N`-boson Hamiltonian in a
//!   truncated one-particle eigenbasis.
//!
//! Heavy inner loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and falls back to plain iterators otherwise.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod collapse;
pub mod error;
pub mod functionals;
pub mod gns;
pub mod grid;
pub mod manybody;
pub mod par;
pub mod potentials;
pub mod solver;

pub use error::{Error, Result};
pub use functionals::{EnergyBreakdown, ModelParams};
pub use grid::{Field, Grid};

pub use num_complex::Complex64;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
