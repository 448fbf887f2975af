//! Core simulator for photonic circuit Born machines under uniform photon loss.
//!
//! Everything in this crate is pure computation: interferometer algebra,
//! Fock-state output statistics, threshold-detector loss models, estimators
//! that reconstruct the lossless click distribution from lossy data, an SPSA
//! training loop, and additive-error permanent estimators. File formats and
//! the command line live in the companion `qcbm-cli` crate.
//!
//! The crate is `no_std` (with `alloc`) so the numerical core carries no IO.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod binning;
pub mod dist;
pub mod error;
pub mod estimator;
pub mod fock;
mod linalg;
pub mod loss;
pub mod matrix;
pub mod mesh;
pub mod metrics;
pub mod output;
pub mod permanent;
pub mod permest;
pub mod rng;
pub mod spsa;
pub mod target;
pub mod train;

pub use error::{Error, Result};
pub use matrix::{Complex64, ComplexMatrix};

/// Crate version, for artifact provenance stamps.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
