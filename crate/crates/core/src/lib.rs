//! Simulation and statistical inference for branching diffusions with
//! immigration observed at discrete times.
//!
//! - [`model`]: coefficients, offspring laws and presets.
//! - [`sde`]: Euler–Maruyama paths, killed and auxiliary jump diffusions.
//! - [`bdi`]: the particle system, regenerative sampling, observation.
//! - [`reconstruct`]: identifiable pairs and increment reconstruction.
//! - [`regress`]: the regression scheme and kernel estimator of `σ²`.
//! - [`verify`]: analytic oracles.
//! - [`cli`]: config-driven experiment runner behind the `bdi` binary.

pub mod bdi;
pub mod cli;
pub mod error;
pub mod model;
pub mod reconstruct;
pub mod regress;
pub mod rng;
pub mod sde;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
