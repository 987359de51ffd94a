//! Realized joint Laplace transform (RJLT) estimation for the volatilities
//! of two jointly observed price processes, with asymptotic inference and a
//! long-span test for volatility dependence.
//!
//! The crate is organized around the pipeline:
//!
//! 1. [`sim`] — bivariate jump-diffusion data-generating processes;
//! 2. [`estimators`] — the RJLT estimators on synchronous and asynchronous
//!    high-frequency data;
//! 3. [`asymptotics`] — fixed-horizon CLT covariances and their plug-in
//!    estimators, studentization;
//! 4. [`longspan`] — daily block statistics and HAC long-run covariances;
//! 5. [`deptest`] — the grid-integrated dependence test with chi-square
//!    mixture calibration;
//! 6. [`mc`] / [`ingest`] — the Monte Carlo experiment harness and tick-data
//!    CSV ingestion behind the CLI.
//!
//! Everything is deterministic given a master seed: replications use
//! independent RNG streams keyed by index, so results do not depend on the
//! worker count (the `parallel` feature toggles rayon; the sequential
//! fallback produces identical output).

pub mod asymptotics;
pub mod config;
pub mod deptest;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod ingest;
pub mod longspan;
pub mod mc;
pub mod rng;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
