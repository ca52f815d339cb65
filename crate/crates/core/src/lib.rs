//! Perturbed gradient descent with unit-ball noise, and the exact `(0, δ)`
//! privacy guarantee that perturbation provides.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its arguments or of an explicitly passed random source:
//!
//! - [`specfn`]: log-gamma, beta, the regularized incomplete beta function
//!   and its derivative, and the finite series for odd dimensions.
//! - [`geometry`]: volumes, caps and overlaps of d-dimensional balls, and
//!   uniform sampling from a ball or its surface.
//! - [`accountant`]: per-step, subsampled and composed δ, the radius solver
//!   and curve tables.
//! - [`optimizer`]: the PrGD loop over pluggable per-example losses.
//! - [`validation`]: Monte Carlo and closed-form oracles for the above.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod accountant;
mod error;
pub mod geometry;
pub mod optimizer;
pub mod rng;
pub mod specfn;
pub mod validation;

pub use error::{Error, Result};
