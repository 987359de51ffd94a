//! Spot-volatility models: exponential-OU factors advanced by the exact OU
//! transition, and daily AR(1) factors with correlated innovations.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{SimGrid, VolPath};
use crate::error::{Error, Result};
use crate::rng::Stream;

/// Exponential-OU volatility factor for one asset:
/// `sigma_t = exp(a + b * tau_t)` with `d tau = -kappa tau dt + dB`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuExpVolSpec {
    /// Mean-reversion rate of the OU factor (per time unit), must be > 0.
    pub kappa: f64,
    /// Log-level intercept.
    pub a: f64,
    /// Log-level loading on the factor.
    pub b: f64,
    /// Initial factor value (ignored when `stationary_init` is set).
    #[serde(default)]
    pub tau0: f64,
    /// Draw `tau_0 ~ N(0, 1/(2 kappa))` instead of using `tau0`.
    #[serde(default)]
    pub stationary_init: bool,
}

impl OuExpVolSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) {
            return Err(Error::config(format!("OU kappa must be > 0, got {}", self.kappa)));
        }
        if ![self.a, self.b, self.tau0].iter().all(|x| x.is_finite()) {
            return Err(Error::config("OU spec parameters must be finite"));
        }
        Ok(())
    }
}

/// One spot-volatility component on an arbitrary strictly increasing time
/// grid. The factor is advanced by the exact OU transition
/// `tau_{i} = e^{-kappa dt} tau_{i-1} + sqrt((1 - e^{-2 kappa dt})/(2 kappa)) Z`,
/// so the path law does not depend on step size.
pub fn ou_exp_vol_on_times(spec: &OuExpVolSpec, times: &[f64], rng: &mut Stream) -> Result<Vec<f64>> {
    spec.validate()?;
    if times.len() < 2 {
        return Err(Error::config("need at least 2 time nodes"));
    }
    let mut tau = if spec.stationary_init {
        let z: f64 = rng.sample(StandardNormal);
        z * (1.0 / (2.0 * spec.kappa)).sqrt()
    } else {
        spec.tau0
    };
    let mut sigma = Vec::with_capacity(times.len());
    sigma.push((spec.a + spec.b * tau).exp());
    for w in times.windows(2) {
        let dt = w[1] - w[0];
        let decay = (-spec.kappa * dt).exp();
        let sd = ((1.0 - decay * decay) / (2.0 * spec.kappa)).sqrt();
        let z: f64 = rng.sample(StandardNormal);
        tau = decay * tau + sd * z;
        sigma.push((spec.a + spec.b * tau).exp());
    }
    Ok(sigma)
}

/// One spot-volatility component on a uniform grid.
pub fn simulate_ou_exp_vol(spec: &OuExpVolSpec, grid: &SimGrid, rng: &mut Stream) -> Result<Vec<f64>> {
    ou_exp_vol_on_times(spec, &grid.times(), rng)
}

/// Joint daily AR(1) volatility factors:
/// `tau^x_t = phi_x tau^x_{t-1} + eps^x_t`, `tau^y_t = phi_y tau^y_{t-1} + eps^y_t`
/// with `eps^y = rho' eps^x + sqrt(1 - rho'^2) eps*`, and
/// `sigma^z = exp(a_z + b_z tau^z)` held constant within each day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar1VolSpec {
    pub phi_x: f64,
    pub phi_y: f64,
    /// Innovation correlation rho' in [-1, 1]; the quantity the dependence
    /// test is designed to detect.
    pub rho_prime: f64,
    pub a_x: f64,
    pub b_x: f64,
    pub a_y: f64,
    pub b_y: f64,
    /// Draw `(tau^x_0, tau^y_0)` from the joint stationary law instead of 0.
    #[serde(default)]
    pub stationary_init: bool,
}

impl Ar1VolSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi_x.abs() < 1.0) || !(self.phi_y.abs() < 1.0) {
            return Err(Error::config(format!(
                "AR(1) coefficients must satisfy |phi| < 1, got ({}, {})",
                self.phi_x, self.phi_y
            )));
        }
        if !(self.rho_prime.abs() <= 1.0) {
            return Err(Error::config(format!("|rho_prime| must be <= 1, got {}", self.rho_prime)));
        }
        Ok(())
    }
}

/// Simulate the AR(1) volatility pair on `n_days` days with `steps_per_day`
/// uniform intraday steps. The factor updates once per integer day; sigma is
/// piecewise constant within each day.
pub fn simulate_ar1_vol(
    spec: &Ar1VolSpec,
    n_days: usize,
    steps_per_day: usize,
    rng: &mut Stream,
) -> Result<VolPath> {
    spec.validate()?;
    if n_days < 1 {
        return Err(Error::config("need n_days >= 1"));
    }
    if steps_per_day < 1 || n_days * steps_per_day < 2 {
        return Err(Error::config("need at least 2 total steps"));
    }

    let (mut tx, mut ty) = if spec.stationary_init {
        stationary_pair(spec, rng)
    } else {
        (0.0, 0.0)
    };
    let cross = (1.0 - spec.rho_prime * spec.rho_prime).sqrt();
    let mut day_tx = Vec::with_capacity(n_days);
    let mut day_ty = Vec::with_capacity(n_days);
    for _ in 0..n_days {
        let ex: f64 = rng.sample(StandardNormal);
        let es: f64 = rng.sample(StandardNormal);
        let ey = spec.rho_prime * ex + cross * es;
        tx = spec.phi_x * tx + ex;
        ty = spec.phi_y * ty + ey;
        day_tx.push(tx);
        day_ty.push(ty);
    }

    let grid = SimGrid::new(n_days as f64, n_days * steps_per_day)?;
    let n = grid.n_steps();
    let mut sigma_x = Vec::with_capacity(n + 1);
    let mut sigma_y = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let day = (i / steps_per_day).min(n_days - 1);
        sigma_x.push((spec.a_x + spec.b_x * day_tx[day]).exp());
        sigma_y.push((spec.a_y + spec.b_y * day_ty[day]).exp());
    }
    VolPath::new(grid.times(), sigma_x, sigma_y)
}

/// Exact draw of the joint stationary law of `(tau^x, tau^y)`.
fn stationary_pair(spec: &Ar1VolSpec, rng: &mut Stream) -> (f64, f64) {
    let vx = 1.0 / (1.0 - spec.phi_x * spec.phi_x);
    let vy = 1.0 / (1.0 - spec.phi_y * spec.phi_y);
    let cov = spec.rho_prime / (1.0 - spec.phi_x * spec.phi_y);
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    let sx = vx.sqrt();
    let tx = sx * z1;
    let ty = (cov / sx) * z1 + (vy - cov * cov / vx).max(0.0).sqrt() * z2;
    (tx, ty)
}
