//! Perturbative algebraic QFT on a finite 1+1D lattice.
//!
//! Relation algebra for locality and causality, lattice Klein–Gordon kernels,
//! polynomial functionals, star and time-ordered products, perturbative
//! S-matrices and the order-by-order extraction of the renormalization map
//! relating two of them.

pub mod cli;
pub mod config;
pub mod error;
pub mod formal_series;
pub mod functionals;
pub mod hbar;
pub mod lagrangian;
pub mod lattice;
pub mod relations;
pub mod samples;
pub mod smatrix;
pub mod report;
pub mod star_algebra;

pub use error::{Error, Result};
pub use hbar::HbarScalar;
