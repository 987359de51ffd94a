//! Volatility-dependence test: grid-integrated squared statistic, its
//! limiting covariance matrix across the grid, chi-square mixture
//! calibration of the critical value, and the full test pipeline.
//!
//! Under independence the statistic `cell_weight * sum_g s_stat(g)^2`
//! converges to `cell_weight * sum_i pi_i chi^2_i`, where `pi_i` are the
//! eigenvalues of the grid covariance matrix of the delta-method limit.
//! Negative eigenvalues (possible, since the HAC estimate need not be
//! positive semidefinite) are discarded and their count reported.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::LaplacePoint;
use crate::exec;
use crate::longspan::{daily_blocks, gamma_quadratic, gamma_vec, hac_cov, s_stat, BlockStats, DayBoundary, HacConfig};
use crate::rng::Stream;
use crate::sim::SamplePath;
use crate::stats;

/// Rectangular grid of Laplace points used to discretize the integrated
/// statistic. The default is the 10x10 grid `u_i = i/10, v_j = j/10` on
/// `(0, 1]^2` with cell weight 1/100.
#[derive(Debug, Clone, PartialEq)]
pub struct TestGrid {
    points: Vec<LaplacePoint>,
    n_u: usize,
    n_v: usize,
    cell_weight: f64,
}

impl TestGrid {
    /// The paper's default: 10x10 on `(0, 1]^2`.
    pub fn standard() -> Self {
        Self::uniform(10, 10, 1.0, 1.0).unwrap()
    }

    /// `n_u x n_v` grid of right endpoints on `(0, u_max] x (0, v_max]`,
    /// row-major in `u` then `v`; cell weight is the sub-rectangle area.
    pub fn uniform(n_u: usize, n_v: usize, u_max: f64, v_max: f64) -> Result<Self> {
        if n_u == 0 || n_v == 0 || !(u_max > 0.0) || !(v_max > 0.0) {
            return Err(Error::config("grid dimensions and bounds must be positive"));
        }
        let mut points = Vec::with_capacity(n_u * n_v);
        for i in 1..=n_u {
            for j in 1..=n_v {
                points.push(LaplacePoint { u: i as f64 * u_max / n_u as f64, v: j as f64 * v_max / n_v as f64 });
            }
        }
        let cell_weight = u_max * v_max / (n_u * n_v) as f64;
        Ok(TestGrid { points, n_u, n_v, cell_weight })
    }

    pub fn points(&self) -> &[LaplacePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn cell_weight(&self) -> f64 {
        self.cell_weight
    }
}

/// Eigenvalue mixture defining the limit law of the test statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    /// Kept (nonnegative) eigenvalues, sorted nonincreasing.
    pub eigenvalues: Vec<f64>,
    pub n_kept: usize,
    pub n_discarded_negative: usize,
    /// Riemann cell weight applied to the mixture sum.
    pub cell_weight: f64,
}

impl MixtureSpec {
    pub fn is_degenerate(&self) -> bool {
        self.eigenvalues.iter().all(|&e| e == 0.0)
    }
}

/// Riemann value of the squared-norm statistic over the grid.
pub fn test_statistic(blocks: &BlockStats, grid: &TestGrid) -> Result<f64> {
    if blocks.grid() != grid.points() {
        return Err(Error::data("block statistics were not computed on this grid"));
    }
    let sum: f64 = (0..grid.len()).map(|g| s_stat(blocks, g).powi(2)).sum();
    Ok(grid.cell_weight() * sum)
}

/// Covariance matrix of the delta-method limit across all grid-point pairs:
/// entry `(g, g') = gamma(g) . V(g, g') . gamma(g')`. Computed on the upper
/// triangle and mirrored, which realizes the `(M + M')/2` symmetrization
/// exactly because `V(q, p)` is the transpose of `V(p, q)`.
pub fn limit_cov_matrix(blocks: &BlockStats, cfg: &HacConfig) -> Result<DMatrix<f64>> {
    let g = blocks.grid().len();
    let gammas: Vec<[f64; 3]> = (0..g).map(|i| gamma_vec(blocks, i)).collect();
    let mut m = DMatrix::zeros(g, g);
    let pairs: Vec<(usize, usize)> = (0..g).flat_map(|i| (i..g).map(move |j| (i, j))).collect();
    let entries: Vec<Result<f64>> = exec::par_map(pairs.len(), |k| {
        let (i, j) = pairs[k];
        let v = hac_cov(blocks, cfg, i, j)?;
        Ok(gamma_quadratic(&gammas[i], &v, &gammas[j]))
    });
    for (k, e) in entries.into_iter().enumerate() {
        let (i, j) = pairs[k];
        let val = e?;
        m[(i, j)] = val;
        m[(j, i)] = val;
    }
    Ok(m)
}

/// Eigendecompose a symmetric matrix, discard negative eigenvalues, and
/// return the mixture together with the positive-part reconstruction
/// `sum_{lambda > 0} lambda v v'` (whose diagonal is nonnegative).
pub fn mixture_from_cov(m: &DMatrix<f64>, cell_weight: f64) -> Result<(MixtureSpec, DMatrix<f64>)> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::config("covariance matrix must be square and nonempty"));
    }
    let dim = m.nrows();
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let mut kept: Vec<f64> = Vec::with_capacity(dim);
    let mut projected = DMatrix::zeros(dim, dim);
    let mut discarded = 0usize;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda >= 0.0 {
            kept.push(lambda);
            let v = eig.eigenvectors.column(k);
            projected.ger(lambda, &v, &v, 1.0);
        } else {
            discarded += 1;
        }
    }
    kept.sort_by(|a, b| b.total_cmp(a));
    let n_kept = kept.len();
    Ok((
        MixtureSpec { eigenvalues: kept, n_kept, n_discarded_negative: discarded, cell_weight },
        projected,
    ))
}

/// Draw `n` values of `cell_weight * sum_i pi_i chi^2_{1,i}`. Draws are
/// produced in fixed-size chunks with chunk-keyed RNG streams, so the result
/// depends only on the caller's stream state, not on scheduling.
pub fn mixture_sample(m: &MixtureSpec, n: usize, rng: &mut Stream) -> Vec<f64> {
    const CHUNK: usize = 4096;
    let base: u64 = rng.gen();
    let n_chunks = n.div_ceil(CHUNK);
    let chunks: Vec<Vec<f64>> = exec::par_map(n_chunks, |c| {
        let mut r = crate::rng::stream(base, c as u64);
        let lo = c * CHUNK;
        let hi = n.min(lo + CHUNK);
        (lo..hi)
            .map(|_| {
                let mut acc = 0.0;
                for &pi in &m.eigenvalues {
                    let z: f64 = r.sample(StandardNormal);
                    acc += pi * z * z;
                }
                m.cell_weight * acc
            })
            .collect()
    });
    chunks.concat()
}

fn check_mc_params(alpha: f64, mc_draws: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if mc_draws < 10_000 {
        return Err(Error::config(format!("mc_draws must be >= 10000, got {mc_draws}")));
    }
    Ok(())
}

/// Empirical `(1 - alpha)` quantile of the mixture; the flag reports the
/// degenerate all-zero spectrum (critical value 0).
pub fn mixture_quantile(m: &MixtureSpec, alpha: f64, mc_draws: usize, rng: &mut Stream) -> Result<(f64, bool)> {
    check_mc_params(alpha, mc_draws)?;
    if m.is_degenerate() {
        return Ok((0.0, true));
    }
    let mut draws = mixture_sample(m, mc_draws, rng);
    draws.sort_by(f64::total_cmp);
    Ok((stats::empirical_quantile(&draws, 1.0 - alpha), false))
}

/// Monte Carlo p-value with the `(r + 1)/(N + 1)` finite-sample correction.
pub fn p_value(statistic: f64, m: &MixtureSpec, mc_draws: usize, rng: &mut Stream) -> Result<f64> {
    check_mc_params(0.5, mc_draws)?;
    let draws = mixture_sample(m, mc_draws, rng);
    Ok(p_value_from_draws(statistic, &draws))
}

fn p_value_from_draws(statistic: f64, draws: &[f64]) -> f64 {
    let r = draws.iter().filter(|&&d| d >= statistic).count();
    (r + 1) as f64 / (draws.len() + 1) as f64
}

/// Everything `run_test` needs besides the data and the RNG.
#[derive(Debug, Clone, PartialEq)]
pub struct DepTestConfig {
    pub hac: HacConfig,
    pub alpha: f64,
    pub mc_draws: usize,
    pub grid: TestGrid,
    pub boundary: DayBoundary,
    /// Echoed into the report; the caller owns the actual stream.
    pub seed: u64,
}

impl DepTestConfig {
    pub fn new(hac: HacConfig, alpha: f64, mc_draws: usize, seed: u64) -> Result<Self> {
        check_mc_params(alpha, mc_draws)?;
        Ok(DepTestConfig { hac, alpha, mc_draws, grid: TestGrid::standard(), boundary: DayBoundary::CrossDays, seed })
    }
}

/// Full report of one dependence test; serializes to a stable-field-order
/// TOML document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    /// Riemann value of the squared-norm statistic.
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub degenerate_spectrum: bool,
    pub n_days: usize,
    pub dt: f64,
    pub kernel: crate::longspan::HacKernel,
    pub bandwidth: usize,
    pub mc_draws: usize,
    pub seed: u64,
    pub n_kept: usize,
    pub n_discarded_negative: usize,
    pub warnings: Vec<String>,
    /// Kept eigenvalue spectrum, nonincreasing.
    pub eigenvalues: Vec<f64>,
}

impl TestReport {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("serialize report: {e}")))
    }

    /// One-line summary row for batch runs.
    pub fn summary_row(&self, pair_id: &str) -> String {
        format!(
            "{pair_id},{},{},{},{}",
            self.statistic, self.critical_value, self.p_value, self.n_discarded_negative
        )
    }
}

/// The whole pipeline: daily blocks -> statistic; HAC grid covariance ->
/// eigenvalues -> mixture quantile and p-value. The quantile and the
/// p-value come from one shared mixture sample, so `reject` is consistent
/// with `statistic >= critical_value` by construction.
pub fn run_test(x: &SamplePath, y: &SamplePath, cfg: &DepTestConfig, rng: &mut Stream) -> Result<TestReport> {
    check_mc_params(cfg.alpha, cfg.mc_draws)?;
    let blocks = daily_blocks(x, y, cfg.grid.points(), cfg.boundary)?;
    let t_days = blocks.n_days();
    if cfg.hac.bandwidth >= t_days {
        return Err(Error::config(format!(
            "bandwidth {} must be smaller than the day count {t_days}",
            cfg.hac.bandwidth
        )));
    }
    let n = x.n_increments();
    let dt = (x.times()[n] - x.times()[0]) / n as f64;
    let mut warnings = Vec::new();
    if t_days as f64 * dt > 0.25 {
        warnings.push(format!(
            "T * dt = {:.4} exceeds 0.25; the joint long-span asymptotics may be unreliable",
            t_days as f64 * dt
        ));
    }

    let statistic = test_statistic(&blocks, &cfg.grid)?;
    let cov = limit_cov_matrix(&blocks, &cfg.hac)?;
    let (mixture, _) = mixture_from_cov(&cov, cfg.grid.cell_weight())?;

    let (critical_value, p) = if mixture.is_degenerate() {
        (0.0, 1.0 / (cfg.mc_draws + 1) as f64)
    } else {
        let mut draws = mixture_sample(&mixture, cfg.mc_draws, rng);
        let p = p_value_from_draws(statistic, &draws);
        draws.sort_by(f64::total_cmp);
        (stats::empirical_quantile(&draws, 1.0 - cfg.alpha), p)
    };

    Ok(TestReport {
        statistic,
        critical_value,
        p_value: p,
        alpha: cfg.alpha,
        reject: statistic >= critical_value,
        degenerate_spectrum: mixture.is_degenerate(),
        n_days: t_days,
        dt,
        kernel: cfg.hac.kernel,
        bandwidth: cfg.hac.bandwidth,
        mc_draws: cfg.mc_draws,
        seed: cfg.seed,
        n_kept: mixture.n_kept,
        n_discarded_negative: mixture.n_discarded_negative,
        warnings,
        eigenvalues: mixture.eigenvalues,
    })
}
