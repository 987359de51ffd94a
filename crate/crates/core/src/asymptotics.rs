//! Fixed-horizon asymptotics: closed-form covariance functions of the limit
//! Gaussian fields of the synchronous estimators, their consistent plug-in
//! estimators, and studentization.
//!
//! Conventions: the covariance functions take the already-scaled arguments
//! `x = sqrt(u) sigma_X`, `y = sqrt(v) sigma_Y` (and barred versions for the
//! second query point); `z` is the Brownian correlation. The plug-in
//! estimators target `int_0^T F(...) ds`, i.e. the asymptotic covariance of
//! the `1/sqrt(dt)`-normalized estimation error, so a confidence interval
//! half-width is `z_{alpha/2} * sqrt(dt * gamma)`.

use crate::error::{Error, Result};
use crate::estimators::{check_sync_uniform, xi, LaplacePoint};
use crate::sim::SamplePath;

/// Covariance query: the two transform arguments `(u, v)` and `(u', v')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovQuery {
    pub p: LaplacePoint,
    pub q: LaplacePoint,
}

impl CovQuery {
    pub fn new(p: LaplacePoint, q: LaplacePoint) -> Self {
        CovQuery { p, q }
    }

    /// Diagonal query (variance at a single point).
    pub fn diag(p: LaplacePoint) -> Self {
        CovQuery { p, q: p }
    }
}

/// Limit covariance function of the non-overlapped estimator:
/// `e^{-(x^2+y^2+xb^2+yb^2)} (e^{-2(x xb + y yb)} + e^{2(x xb + y yb)} - 2)`.
/// All exponents are nonpositive after combining, so the evaluation never
/// overflows.
pub fn f_cov_v(x: f64, y: f64, xb: f64, yb: f64) -> f64 {
    let sig = x * x + y * y + xb * xb + yb * yb;
    let s = x * xb + y * yb;
    (2.0 * s - sig).exp() + (-2.0 * s - sig).exp() - 2.0 * (-sig).exp()
}

/// Limit covariance function of the overlapped estimator at Brownian
/// correlation `z`; equals `f_cov_v / 2` at `z = 0` and is dominated by
/// `f_cov_v` on the diagonal for every `|z| <= 1`.
pub fn f_cov_u(x: f64, y: f64, xb: f64, yb: f64, z: f64) -> Result<f64> {
    if !(z.abs() <= 1.0) {
        return Err(Error::config(format!("|z| must be <= 1, got {z}")));
    }
    let sig = x * x + y * y + xb * xb + yb * yb;
    let s = x * xb + y * yb;
    let c1 = 2.0 * xb * y * z;
    let c2 = 2.0 * x * yb * z;
    Ok(0.5
        * ((2.0 * s - sig).exp() + (-2.0 * s - sig).exp()
            + (c1 - sig).exp()
            + (-c1 - sig).exp()
            + (c2 - sig).exp()
            + (-c2 - sig).exp()
            - 6.0 * (-sig).exp()))
}

/// Plug-in covariance estimator for the non-overlapped estimator:
/// difference of a product-of-cosines sum and a summed-frequency sum over
/// the odd/even non-overlapped pairs.
pub fn gamma_hat_v(x: &SamplePath, y: &SamplePath, cq: &CovQuery) -> Result<f64> {
    let (n, dt) = check_sync_uniform(x, y)?;
    let pq = LaplacePoint { u: cq.p.u + cq.q.u, v: cq.p.v + cq.q.v };
    let m = n / 2;
    let mut prod = 0.0;
    let mut summed = 0.0;
    for i in 1..=m {
        let dx = x.increment(2 * i - 1);
        let dy = y.increment(2 * i);
        prod += xi(dx, dy, dt, cq.p) * xi(dx, dy, dt, cq.q);
        summed += xi(dx, dy, dt, pq);
    }
    Ok(4.0 * dt * prod - 4.0 * dt * summed)
}

/// Plug-in covariance estimator for the overlapped estimator: the four-sum
/// expression with one product-of-joint-cosines sum, two lag-one sums that
/// split the joint cosines into marginal factors, and a summed-frequency
/// correction.
///
/// The lag-one sums reference the increment before `i`; they run over
/// `i = 2..=n-2` so that every index is in range (one fewer term than a
/// literal reading with an undefined zeroth increment would have; the
/// difference is `O(dt)`).
pub fn gamma_hat_u(x: &SamplePath, y: &SamplePath, cq: &CovQuery) -> Result<f64> {
    let (n, dt) = check_sync_uniform(x, y)?;
    if n < 4 {
        return Err(Error::data("need at least 4 increments"));
    }
    let (p, q) = (cq.p, cq.q);
    let pq = LaplacePoint { u: p.u + q.u, v: p.v + q.v };
    let rdt = dt.sqrt();
    let su = (2.0 * p.u).sqrt();
    let sv = (2.0 * p.v).sqrt();
    let suq = (2.0 * q.u).sqrt();
    let svq = (2.0 * q.v).sqrt();

    let mut s1 = 0.0;
    let mut s4 = 0.0;
    for i in 1..n {
        let dx = x.increment(i);
        let dy = y.increment(i + 1);
        s1 += xi(dx, dy, dt, p) * xi(dx, dy, dt, q);
        s4 += xi(dx, dy, dt, pq);
    }
    let mut s2 = 0.0;
    let mut s3 = 0.0;
    for i in 2..=n.saturating_sub(2) {
        let a = x.increment(i - 1) / rdt;
        let b = y.increment(i + 1) / rdt;
        let c = x.increment(i + 1) / rdt;
        let d = y.increment(i + 2) / rdt;
        s2 += (su * a).cos() * (sv * b).cos() * (suq * c).cos() * (svq * d).cos();
        s3 += (suq * a).cos() * (svq * b).cos() * (su * c).cos() * (sv * d).cos();
    }
    Ok(dt * s1 + dt * s2 + dt * s3 - 3.0 * dt * s4)
}

/// A studentized estimation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentizedStat {
    /// `(estimate - truth) / sqrt(dt * max(gamma, eps))`.
    pub z: f64,
    pub estimate: f64,
    pub truth: f64,
    /// The variance estimate after flooring.
    pub gamma: f64,
    pub dt: f64,
    /// Set when the raw variance estimate was nonpositive (the floor was
    /// binding); such draws should be reported separately.
    pub gamma_floored: bool,
}

/// Variance floor applied before studentizing; plug-in covariance estimates
/// can be negative in finite samples.
pub const GAMMA_FLOOR: f64 = 1e-12;

pub fn studentize(estimate: f64, truth: f64, gamma: f64, dt: f64) -> Result<StudentizedStat> {
    if !(dt > 0.0) {
        return Err(Error::config(format!("dt must be > 0, got {dt}")));
    }
    let floored = !(gamma > 0.0);
    let g = gamma.max(GAMMA_FLOOR);
    Ok(StudentizedStat {
        z: (estimate - truth) / (dt * g).sqrt(),
        estimate,
        truth,
        gamma: g,
        dt,
        gamma_floored: floored,
    })
}
