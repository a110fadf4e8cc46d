//! Sparse low-rank decomposition `Y = A·X` by ℓ4-norm maximization on the
//! unit sphere.
//!
//! The crate is `no_std` and needs only `alloc`. Enable the `std` feature to
//! route large matrix products through nalgebra's blocked kernels.

#![no_std]

extern crate alloc;

pub mod baseline_adm;
pub mod error;
pub mod landscape;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod objective;
pub mod pipeline;
pub mod precond;
pub mod solver;

pub use error::{Error, Result};
