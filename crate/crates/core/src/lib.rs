//! Numerical core for constructing weak solutions of dY = g(Y) dX driven by
//! very rough fractional Brownian motion (Hurst H <= 1/4) through the
//! fractional stochastic heat equation.
//!
//! The pipeline: simulate the linear and nonlinear fractional heat equations
//! on identical spectral white noise ([`spde`]), peel the driving fBm off the
//! linear trace with the smooth-component decomposition ([`fields`]), and
//! verify the quantitative laws — covariance identities, increment scaling,
//! the correction rate, and the weak-solution limit — statistically
//! ([`experiments`]). [`params`] holds the model constants, [`kernel`] the
//! stable transition density, and [`sampler`] exact Gaussian-process
//! sampling.

pub mod error;
pub mod experiments;
pub mod fields;
pub mod kernel;
pub mod params;
pub mod quad;
pub mod rng;
pub mod sampler;
pub mod spde;

pub use error::{Error, Result};
pub use params::{derive_params, make_drift_pair, make_drift_pair_with_lip, DriftPair, GFn, ModelParams};
pub use sampler::{PathSample, TimeGrid};
pub use spde::{CoupledTrace, GridConfig};
