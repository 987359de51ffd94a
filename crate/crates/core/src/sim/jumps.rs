//! Jump components: compound Poisson, symmetric alpha-stable increments via
//! the Chambers-Mallows-Stuck transform, and Poisson observation times.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Jump component of one price process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpSpec {
    /// No jumps.
    None,
    /// Compound Poisson: `intensity` jumps per time unit, i.i.d. N(0, size_sd^2) sizes.
    CompoundPoisson { intensity: f64, size_sd: f64 },
    /// Symmetric alpha-stable with index `alpha` in (0, 1) and scale factor.
    /// Indices >= 1 are rejected: the estimators require finite-variation jumps.
    AlphaStable { alpha: f64, scale: f64 },
}

impl JumpSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            JumpSpec::None => Ok(()),
            JumpSpec::CompoundPoisson { intensity, size_sd } => {
                if !(intensity >= 0.0) {
                    return Err(Error::config(format!("jump intensity must be >= 0, got {intensity}")));
                }
                if !(size_sd >= 0.0) {
                    return Err(Error::config(format!("jump size sd must be >= 0, got {size_sd}")));
                }
                Ok(())
            }
            JumpSpec::AlphaStable { alpha, scale } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::config(format!("stable index must lie in (0, 1), got {alpha}")));
                }
                if !(scale >= 0.0) {
                    return Err(Error::config(format!("stable scale must be >= 0, got {scale}")));
                }
                Ok(())
            }
        }
    }
}

/// One standard symmetric alpha-stable draw by the Chambers-Mallows-Stuck
/// transform (`U` uniform on (-pi/2, pi/2), `W` standard exponential):
/// `S = sin(alpha U) / cos(U)^{1/alpha} * (cos((1-alpha) U) / W)^{(1-alpha)/alpha}`.
/// The characteristic function of `S` is `exp(-|t|^alpha)`.
pub fn sample_standard_sym_stable(alpha: f64, rng: &mut Stream) -> f64 {
    let u: f64 = rng.gen_range(-FRAC_PI_2..FRAC_PI_2);
    let w: f64 = rng.sample(Exp1);
    cms_transform(alpha, u, w)
}

pub(crate) fn cms_transform(alpha: f64, u: f64, w: f64) -> f64 {
    (alpha * u).sin() / u.cos().powf(1.0 / alpha)
        * (((1.0 - alpha) * u).cos() / w).powf((1.0 - alpha) / alpha)
}

/// `n` increments of a symmetric alpha-stable process over steps of length
/// `dt`: each increment is `scale * dt^{1/alpha} * S` with `S` standard.
pub fn sample_alpha_stable_increments(
    alpha: f64,
    scale: f64,
    n: usize,
    dt: f64,
    rng: &mut Stream,
) -> Result<Vec<f64>> {
    JumpSpec::AlphaStable { alpha, scale }.validate()?;
    if !(dt > 0.0) {
        return Err(Error::config(format!("dt must be > 0, got {dt}")));
    }
    let step_scale = scale * dt.powf(1.0 / alpha);
    Ok((0..n).map(|_| step_scale * sample_standard_sym_stable(alpha, rng)).collect())
}

/// Compound-Poisson jumps on `[0, t_span]`: `Poisson(intensity * t_span)`
/// jumps at i.i.d. uniform times (returned sorted) with `N(0, size_sd^2)`
/// sizes paired to the sorted times.
pub fn sample_compound_poisson(
    intensity: f64,
    size_sd: f64,
    t_span: f64,
    rng: &mut Stream,
) -> Result<(Vec<f64>, Vec<f64>)> {
    JumpSpec::CompoundPoisson { intensity, size_sd }.validate()?;
    if !(t_span > 0.0) {
        return Err(Error::config(format!("t_span must be > 0, got {t_span}")));
    }
    let mean = intensity * t_span;
    if mean == 0.0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let count = Poisson::new(mean)
        .map_err(|e| Error::config(format!("invalid poisson mean {mean}: {e}")))?
        .sample(rng) as usize;
    let mut jumps: Vec<(f64, f64)> = (0..count)
        .map(|_| {
            let t: f64 = rng.gen_range(0.0..t_span);
            let z: f64 = rng.sample(StandardNormal);
            (t, size_sd * z)
        })
        .collect();
    jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(jumps.into_iter().unzip())
}

/// Event times of a homogeneous Poisson process on `[0, t_span]` with
/// expected count `mean_events`, sorted, with 0 prepended as the initial
/// observation time. Fails if the draw produced zero events (callers may
/// retry with a fresh stream).
pub fn sample_poisson_observation_times(
    mean_events: f64,
    t_span: f64,
    rng: &mut Stream,
) -> Result<Vec<f64>> {
    if !(mean_events > 0.0) {
        return Err(Error::config(format!("mean_events must be > 0, got {mean_events}")));
    }
    if !(t_span > 0.0) {
        return Err(Error::config(format!("t_span must be > 0, got {t_span}")));
    }
    let count = Poisson::new(mean_events)
        .map_err(|e| Error::config(format!("invalid poisson mean {mean_events}: {e}")))?
        .sample(rng) as usize;
    if count == 0 {
        return Err(Error::numerical("poisson observation draw produced zero events"));
    }
    let mut times: Vec<f64> = (0..count).map(|_| rng.gen_range(0.0..t_span)).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    if times[0] > 0.0 {
        times.insert(0, 0.0);
    }
    Ok(times)
}
