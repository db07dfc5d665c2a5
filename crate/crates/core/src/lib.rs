//! Simulation and verification laboratory for Brownian motion on the unitary
//! group U(n).
//!
//! The crate simulates trajectories of the SDE-driven unitary process under
//! several initial laws and time rescalings, computes linear statistics of
//! the matrix entries, and checks Monte Carlo estimates against exact
//! finite-n moment formulas and asymptotic Gaussian limit laws.
//!
//! Module map:
//! - [`linalg`]: dense complex matrices, trace forms, Hermitian
//!   eigendecomposition, unitary matrix exponential.
//! - [`samplers`]: Hermitian Brownian increments, Haar unitaries, uniform
//!   permutations, standard complex Gaussians, reproducible RNG streams.
//! - [`engine`]: path simulation and linear-statistic extraction.
//! - [`oracles`]: closed-form moments and limit covariances.
//! - [`stats`]: Monte Carlo orchestration, estimators with batch-means
//!   standard errors, distributional tests.
//! - [`scenario`], [`presets`], [`report`]: experiment configuration,
//!   named experiments, and machine-readable reports.

pub mod engine;
pub mod error;
pub mod linalg;
pub mod oracles;
pub mod presets;
pub mod report;
pub mod stats;
pub mod samplers;
pub mod scenario;
pub mod tol;

pub use error::{Result, UbmError};
