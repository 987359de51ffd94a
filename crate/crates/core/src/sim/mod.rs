//! Data-generating processes: correlated Brownian drivers, exponential-OU and
//! daily AR(1) volatilities, compound-Poisson and symmetric alpha-stable
//! jumps, and regular or Poisson observation times.
//!
//! All simulators are pure functions of an explicit RNG stream and never
//! spawn threads; Monte Carlo drivers parallelize over replications with
//! disjoint streams.

mod jumps;
mod prices;
mod vol;

pub use jumps::{
    sample_alpha_stable_increments, sample_compound_poisson, sample_poisson_observation_times,
    JumpSpec,
};
pub use prices::{simulate_model, simulate_model_async, simulate_prices, AsyncSim, BivariateModelSpec, VolModel};
pub use vol::{ou_exp_vol_on_times, simulate_ar1_vol, simulate_ou_exp_vol, Ar1VolSpec, OuExpVolSpec};

use crate::error::{Error, Result};

/// Uniform simulation grid on `[0, t_end]` with `n_steps` steps of length `dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimGrid {
    t_end: f64,
    n_steps: usize,
    dt: f64,
}

impl SimGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::config(format!("t_end must be positive, got {t_end}")));
        }
        if n_steps < 2 {
            return Err(Error::config(format!("n_steps must be >= 2, got {n_steps}")));
        }
        let dt = t_end / n_steps as f64;
        Ok(SimGrid { t_end, n_steps, dt })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Node times `0, dt, 2 dt, ..., t_end` (`n_steps + 1` values).
    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| i as f64 * self.dt).collect()
    }
}

/// Latent spot-volatility trajectory of both assets on a (possibly irregular)
/// time grid. The value at node `i-1` applies over `(t_{i-1}, t_i]`
/// (left-limit convention), which is what [`true_elt`] integrates.
#[derive(Debug, Clone, PartialEq)]
pub struct VolPath {
    times: Vec<f64>,
    sigma_x: Vec<f64>,
    sigma_y: Vec<f64>,
}

impl VolPath {
    pub fn new(times: Vec<f64>, sigma_x: Vec<f64>, sigma_y: Vec<f64>) -> Result<Self> {
        if times.len() < 3 {
            return Err(Error::config("vol path needs at least 3 nodes"));
        }
        if times.len() != sigma_x.len() || times.len() != sigma_y.len() {
            return Err(Error::config("vol path arrays must have equal length"));
        }
        if !times.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::config("vol path times must be strictly increasing"));
        }
        if sigma_x.iter().chain(&sigma_y).any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::config("spot volatilities must be finite and nonnegative"));
        }
        Ok(VolPath { times, sigma_x, sigma_y })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn sigma_x(&self) -> &[f64] {
        &self.sigma_x
    }

    pub fn sigma_y(&self) -> &[f64] {
        &self.sigma_y
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

/// One observed log-price series: strictly increasing timestamps (in time
/// units of the model, typically days) and the value at each timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl SamplePath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() < 3 {
            return Err(Error::data("sample path needs at least 3 observations"));
        }
        if times.len() != values.len() {
            return Err(Error::data("times and values must have equal length"));
        }
        if !times[0].is_finite() || times[0] < 0.0 {
            return Err(Error::data("observation times must start at >= 0"));
        }
        if !times.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::data("observation times must be strictly increasing"));
        }
        Ok(SamplePath { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of increments (observations minus one).
    pub fn n_increments(&self) -> usize {
        self.values.len() - 1
    }

    pub fn increment(&self, i: usize) -> f64 {
        self.values[i] - self.values[i - 1]
    }
}

/// Pathwise empirical joint Laplace transform of the two squared
/// volatilities, as a left-endpoint Riemann sum over the vol grid. This is
/// the per-path truth that estimator errors are measured against.
pub fn true_elt(vol: &VolPath, u: f64, v: f64) -> Result<f64> {
    if !(u >= 0.0) || !(v >= 0.0) {
        return Err(Error::config(format!("laplace arguments must be nonnegative, got ({u}, {v})")));
    }
    let mut acc = 0.0;
    for i in 1..vol.times.len() {
        let dt = vol.times[i] - vol.times[i - 1];
        let sx = vol.sigma_x[i - 1];
        let sy = vol.sigma_y[i - 1];
        acc += dt * (-u * sx * sx - v * sy * sy).exp();
    }
    Ok(acc)
}
