//! Fermionic antiflatness (FAF) of disordered spin-1/2 chains.
//!
//! The crate builds the disordered XX, XXZ and single-impurity chains in a
//! fixed-magnetization sector, diagonalizes them exactly, and measures how far
//! eigenstates and quenched states sit from the fermionic Gaussian manifold via
//! the Majorana covariance matrix. Supporting pieces cover the free-fermion
//! normal-mode machinery, a phenomenological l-bit model, the split of
//! interactions relative to the Anderson integrals of motion, resonance (cat
//! state) statistics and a deterministic disorder-ensemble runner.

pub mod basis;
pub mod dynamics;
pub mod eigensolve;
pub mod ensemble;
pub mod error;
pub mod faf;
pub mod fit;
pub mod freefermion;
pub mod hamiltonian;
pub mod interaction_decomp;
pub mod lbit;
pub mod resonance;
pub mod rng;
pub mod selftest;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Version string recorded in every run record.
pub const SOFTWARE_VERSION: &str = env!("CARGO_PKG_VERSION");
