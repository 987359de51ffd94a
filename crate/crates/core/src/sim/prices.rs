//! Bivariate jump-diffusion price simulation on regular or irregular grids.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::jumps::JumpSpec;
use super::vol::{ou_exp_vol_on_times, simulate_ar1_vol, Ar1VolSpec, OuExpVolSpec};
use super::{sample_poisson_observation_times, SamplePath, SimGrid, VolPath};
use crate::error::{Error, Result};
use crate::rng::Stream;

/// Volatility pair: either two exponential-OU factors (independent drivers)
/// or the joint daily AR(1) model whose innovation correlation the
/// dependence test targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum VolModel {
    OuExp { x: OuExpVolSpec, y: OuExpVolSpec },
    Ar1(Ar1VolSpec),
}

impl VolModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            VolModel::OuExp { x, y } => {
                x.validate()?;
                y.validate()
            }
            VolModel::Ar1(s) => s.validate(),
        }
    }
}

/// Full bivariate model: constant drifts, constant Brownian correlation
/// `rho`, a volatility pair, and one jump component per asset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariateModelSpec {
    pub drift_x: f64,
    pub drift_y: f64,
    /// Brownian correlation: `dW^Y = rho dW^X + sqrt(1 - rho^2) dW*`.
    pub rho: f64,
    pub vol: VolModel,
    pub jump_x: JumpSpec,
    pub jump_y: JumpSpec,
}

impl BivariateModelSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho.abs() <= 1.0) {
            return Err(Error::config(format!("|rho| must be <= 1, got {}", self.rho)));
        }
        if !self.drift_x.is_finite() || !self.drift_y.is_finite() {
            return Err(Error::config("drifts must be finite"));
        }
        self.vol.validate()?;
        self.jump_x.validate()?;
        self.jump_y.validate()
    }
}

/// Per-increment jump contributions on the grid described by `times`.
/// Compound-Poisson jumps are binned into the increment containing them;
/// stable jumps are drawn per increment with the `dt^{1/alpha}` scaling.
fn jump_increments(spec: &JumpSpec, times: &[f64], rng: &mut Stream) -> Result<Vec<f64>> {
    let n = times.len() - 1;
    match *spec {
        JumpSpec::None => Ok(vec![0.0; n]),
        JumpSpec::CompoundPoisson { intensity, size_sd } => {
            let span = times[n] - times[0];
            let (jt, js) = super::sample_compound_poisson(intensity, size_sd, span, rng)?;
            let mut out = vec![0.0; n];
            for (t, s) in jt.iter().zip(&js) {
                let abs = times[0] + t;
                // first increment (t_{i-1}, t_i] with t_i >= jump time
                let idx = times.partition_point(|&x| x < abs).clamp(1, n);
                out[idx - 1] += s;
            }
            Ok(out)
        }
        JumpSpec::AlphaStable { alpha, scale } => {
            let step_scale = |dt: f64| scale * dt.powf(1.0 / alpha);
            Ok(times
                .windows(2)
                .map(|w| step_scale(w[1] - w[0]) * super::jumps::sample_standard_sym_stable(alpha, rng))
                .collect())
        }
    }
}

/// Euler recursion for both log prices on the vol path's grid:
/// `dZ_i = b^Z dt_i + sigma^Z_{i-1} dW^Z_i + J^Z_i` with
/// `dW^Y = rho dW^X + sqrt(1 - rho^2) dW*`. Jump draws are consumed before
/// the diffusion normals (X jumps, then Y jumps), so the draw order is fixed.
pub fn simulate_prices(
    model: &BivariateModelSpec,
    vol: &VolPath,
    rng: &mut Stream,
) -> Result<(SamplePath, SamplePath)> {
    model.validate()?;
    let times = vol.times();
    let n = vol.n_steps();
    let jx = jump_increments(&model.jump_x, times, rng)?;
    let jy = jump_increments(&model.jump_y, times, rng)?;

    let rho = model.rho;
    let cross = (1.0 - rho * rho).sqrt();
    let mut x = Vec::with_capacity(n + 1);
    let mut y = Vec::with_capacity(n + 1);
    x.push(0.0);
    y.push(0.0);
    for i in 1..=n {
        let dt = times[i] - times[i - 1];
        let sq = dt.sqrt();
        let zx: f64 = rng.sample(StandardNormal);
        let zs: f64 = rng.sample(StandardNormal);
        let dwx = sq * zx;
        let dwy = rho * dwx + cross * sq * zs;
        x.push(x[i - 1] + model.drift_x * dt + vol.sigma_x()[i - 1] * dwx + jx[i - 1]);
        y.push(y[i - 1] + model.drift_y * dt + vol.sigma_y()[i - 1] * dwy + jy[i - 1]);
    }
    Ok((SamplePath::new(times.to_vec(), x)?, SamplePath::new(times.to_vec(), y)?))
}

/// Simulate volatility and prices on a uniform grid. For the AR(1) model the
/// grid must span an integer number of days with a whole number of steps per
/// day. Draw order: vol X, vol Y (OU) or the daily pair (AR1), then jumps
/// and diffusion via [`simulate_prices`].
pub fn simulate_model(
    model: &BivariateModelSpec,
    grid: &SimGrid,
    rng: &mut Stream,
) -> Result<(VolPath, SamplePath, SamplePath)> {
    model.validate()?;
    let vol = match &model.vol {
        VolModel::OuExp { x, y } => {
            let times = grid.times();
            let sx = ou_exp_vol_on_times(x, &times, rng)?;
            let sy = ou_exp_vol_on_times(y, &times, rng)?;
            VolPath::new(times, sx, sy)?
        }
        VolModel::Ar1(spec) => {
            let days = grid.t_end().round();
            if (grid.t_end() - days).abs() > 1e-9 || days < 1.0 {
                return Err(Error::config("AR(1) volatility requires an integer-day horizon"));
            }
            let days = days as usize;
            if grid.n_steps() % days != 0 {
                return Err(Error::config("AR(1) volatility requires a whole number of steps per day"));
            }
            simulate_ar1_vol(spec, days, grid.n_steps() / days, rng)?
        }
    };
    let (x, y) = simulate_prices(model, &vol, rng)?;
    Ok((vol, x, y))
}

/// Asynchronously observed simulation: X and Y are sampled at independent
/// Poisson observation times, the latent dynamics run on the merged grid.
#[derive(Debug, Clone)]
pub struct AsyncSim {
    /// Volatility on the merged grid (for per-path truth).
    pub vol: VolPath,
    /// X observed at its own Poisson times.
    pub x: SamplePath,
    /// Y observed at its own Poisson times.
    pub y: SamplePath,
}

/// Simulate the model on the union of two Poisson observation grids on
/// `[0, t_span]` and observe each asset only at its own times. Draw order:
/// X times, Y times, vol, jumps, diffusion.
pub fn simulate_model_async(
    model: &BivariateModelSpec,
    t_span: f64,
    x_mean_obs: f64,
    y_mean_obs: f64,
    rng: &mut Stream,
) -> Result<AsyncSim> {
    model.validate()?;
    let VolModel::OuExp { x: vx, y: vy } = &model.vol else {
        return Err(Error::config("asynchronous sampling requires the OU volatility model"));
    };
    let tx = sample_poisson_observation_times(x_mean_obs, t_span, rng)?;
    let ty = sample_poisson_observation_times(y_mean_obs, t_span, rng)?;

    // Sorted union, remembering where each observation grid landed.
    let mut merged = Vec::with_capacity(tx.len() + ty.len());
    let (mut ix, mut iy) = (0usize, 0usize);
    let mut x_idx = Vec::with_capacity(tx.len());
    let mut y_idx = Vec::with_capacity(ty.len());
    while ix < tx.len() || iy < ty.len() {
        let next = match (tx.get(ix), ty.get(iy)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        merged.push(next);
        let k = merged.len() - 1;
        while ix < tx.len() && tx[ix] == next {
            x_idx.push(k);
            ix += 1;
        }
        while iy < ty.len() && ty[iy] == next {
            y_idx.push(k);
            iy += 1;
        }
    }
    if merged.len() < 3 {
        return Err(Error::numerical("too few merged observation times"));
    }

    let sx = ou_exp_vol_on_times(vx, &merged, rng)?;
    let sy = ou_exp_vol_on_times(vy, &merged, rng)?;
    let vol = VolPath::new(merged, sx, sy)?;
    let (px, py) = simulate_prices(model, &vol, rng)?;
    let x = SamplePath::new(tx, x_idx.iter().map(|&k| px.values()[k]).collect())?;
    let y = SamplePath::new(ty, y_idx.iter().map(|&k| py.values()[k]).collect())?;
    Ok(AsyncSim { vol, x, y })
}
