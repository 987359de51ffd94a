//! Realized joint Laplace transform estimators.
//!
//! All four estimators aggregate cosine summands
//! `xi_i = cos((sqrt(2u) dX_i + sqrt(2v) dY_{i+1}) / sqrt(dt))`:
//!
//! * `v_hat` — non-overlapped increment pairs `(dX_{2i-1}, dY_{2i})`;
//! * `u_hat` — overlapped pairs `(dX_i, dY_{i+1})`, smaller asymptotic
//!   variance;
//! * `v_prime_hat` — `v_hat` plus its mirror in `(x, u) <-> (y, v)`, which
//!   shares the limit law of `u_hat`;
//! * `u_async_hat` — the asynchronous variant pairing each X increment with
//!   the smallest covering Y increment.
//!
//! Estimates approach the pathwise integral `int_0^T exp(-u sigma_X^2(s)
//! - v sigma_Y^2(s)) ds` as the mesh shrinks, and are robust to
//! finite-variation jumps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::SamplePath;

/// Argument `(u, v)` of the joint Laplace transform; both components
/// nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplacePoint {
    pub u: f64,
    pub v: f64,
}

impl LaplacePoint {
    pub fn new(u: f64, v: f64) -> Result<Self> {
        if !(u >= 0.0) || !(v >= 0.0) {
            return Err(Error::config(format!("laplace point must be nonnegative, got ({u}, {v})")));
        }
        Ok(LaplacePoint { u, v })
    }
}

/// Which estimator produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    V,
    U,
    VPrime,
    UAsync,
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EstimatorKind::V => write!(f, "V"),
            EstimatorKind::U => write!(f, "U"),
            EstimatorKind::VPrime => write!(f, "Vprime"),
            EstimatorKind::UAsync => write!(f, "Uasync"),
        }
    }
}

/// One realized joint Laplace transform value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RjltEstimate {
    pub value: f64,
    pub kind: EstimatorKind,
    /// Number of cosine summands aggregated.
    pub n_summands: usize,
    /// Grid step for the synchronous estimators; `None` for the
    /// asynchronous one.
    pub dt: Option<f64>,
    /// Asynchronous only: X increments skipped for lack of a Y cover.
    pub n_skipped: usize,
}

/// One cosine summand of the synchronous estimators.
pub fn xi(dx: f64, dy_next: f64, dt: f64, p: LaplacePoint) -> f64 {
    debug_assert!(dt > 0.0);
    (((2.0 * p.u).sqrt() * dx + (2.0 * p.v).sqrt() * dy_next) / dt.sqrt()).cos()
}

/// Validate that two paths are observed on the same uniform grid; returns
/// `(n_increments, dt)`.
pub(crate) fn check_sync_uniform(x: &SamplePath, y: &SamplePath) -> Result<(usize, f64)> {
    if x.times().len() != y.times().len() {
        return Err(Error::data("paths have different observation counts"));
    }
    let n = x.n_increments();
    if n < 3 {
        return Err(Error::data("need at least 3 increments"));
    }
    let span = x.times()[n] - x.times()[0];
    let dt = span / n as f64;
    let tol = 1e-6 * dt;
    for i in 0..=n {
        if (x.times()[i] - y.times()[i]).abs() > tol {
            return Err(Error::data("paths are not aligned on the same grid"));
        }
        if i > 0 && ((x.times()[i] - x.times()[i - 1]) - dt).abs() > tol {
            return Err(Error::data("observation grid is not uniform"));
        }
    }
    Ok((n, dt))
}

/// Non-overlapped estimator: `2 dt * sum_{i=1}^{floor(n/2)} xi_{2i-1}`.
pub fn v_hat(x: &SamplePath, y: &SamplePath, p: LaplacePoint) -> Result<RjltEstimate> {
    let (n, dt) = check_sync_uniform(x, y)?;
    let m = n / 2;
    let mut acc = 0.0;
    for i in 1..=m {
        acc += xi(x.increment(2 * i - 1), y.increment(2 * i), dt, p);
    }
    Ok(RjltEstimate { value: 2.0 * dt * acc, kind: EstimatorKind::V, n_summands: m, dt: Some(dt), n_skipped: 0 })
}

/// Overlapped estimator: `dt * sum_{i=1}^{n-1} xi_i`.
pub fn u_hat(x: &SamplePath, y: &SamplePath, p: LaplacePoint) -> Result<RjltEstimate> {
    let (n, dt) = check_sync_uniform(x, y)?;
    let mut acc = 0.0;
    for i in 1..n {
        acc += xi(x.increment(i), y.increment(i + 1), dt, p);
    }
    Ok(RjltEstimate { value: dt * acc, kind: EstimatorKind::U, n_summands: n - 1, dt: Some(dt), n_skipped: 0 })
}

/// Symmetrized non-overlapped estimator: each pair contributes its mirror
/// summand with the roles of `(X, u)` and `(Y, v)` exchanged.
pub fn v_prime_hat(x: &SamplePath, y: &SamplePath, p: LaplacePoint) -> Result<RjltEstimate> {
    let (n, dt) = check_sync_uniform(x, y)?;
    let m = n / 2;
    let mirror = LaplacePoint { u: p.v, v: p.u };
    let mut acc = 0.0;
    for i in 1..=m {
        acc += xi(x.increment(2 * i - 1), y.increment(2 * i), dt, p);
        acc += xi(y.increment(2 * i - 1), x.increment(2 * i), dt, mirror);
    }
    Ok(RjltEstimate { value: dt * acc, kind: EstimatorKind::VPrime, n_summands: m, dt: Some(dt), n_skipped: 0 })
}

/// Asynchronous estimator. For each X increment over `(t_{i-1}, t_i]` the Y
/// side uses the smallest covering increment: from the last Y observation at
/// or before `t_{i-1}` to the first at or after `t_i`, each part of the
/// cosine argument normalized by its own interval length. X increments with
/// no Y observation at or past `t_i` are skipped and counted.
pub fn u_async_hat(x: &SamplePath, y: &SamplePath, p: LaplacePoint) -> Result<RjltEstimate> {
    let tx = x.times();
    let ty = y.times();
    let su = (2.0 * p.u).sqrt();
    let sv = (2.0 * p.v).sqrt();
    let mut acc = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for i in 1..tx.len() {
        let t_prev = tx[i - 1];
        let t_cur = tx[i];
        // last Y time <= t_prev
        let jm = ty.partition_point(|&t| t <= t_prev);
        if jm == 0 {
            skipped += 1;
            continue;
        }
        let jm = jm - 1;
        // first Y time >= t_cur
        let jp = ty.partition_point(|&t| t < t_cur);
        if jp == ty.len() {
            skipped += 1;
            continue;
        }
        let dt_x = t_cur - t_prev;
        let dt_yc = ty[jp] - ty[jm];
        let dx = x.increment(i);
        let dy = y.values()[jp] - y.values()[jm];
        acc += dt_x * (su * dx / dt_x.sqrt() + sv * dy / dt_yc.sqrt()).cos();
        used += 1;
    }
    if used == 0 {
        return Err(Error::data("no X increment has a Y cover"));
    }
    Ok(RjltEstimate { value: acc, kind: EstimatorKind::UAsync, n_summands: used, dt: None, n_skipped: skipped })
}

/// Dispatch by kind; `UAsync` accepts irregular grids, the others require a
/// shared uniform grid.
pub fn estimate(kind: EstimatorKind, x: &SamplePath, y: &SamplePath, p: LaplacePoint) -> Result<RjltEstimate> {
    match kind {
        EstimatorKind::V => v_hat(x, y, p),
        EstimatorKind::U => u_hat(x, y, p),
        EstimatorKind::VPrime => v_prime_hat(x, y, p),
        EstimatorKind::UAsync => u_async_hat(x, y, p),
    }
}
