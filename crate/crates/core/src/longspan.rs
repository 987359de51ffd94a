//! Long-span machinery: per-day realized Laplace blocks, HAC long-run
//! covariance estimation with Bartlett or Parzen weights, and the
//! delta-method pieces of the dependence statistic.
//!
//! A "day" is one unit of time; data must span an integer number of days on
//! a uniform grid. For day `t` and grid point `(u, v)` the blocks are
//!
//! * `z_xy`: `sum_i dt cos((sqrt(2u) dX_i + sqrt(2v) dY_{i+1}) / sqrt(dt))`,
//! * `z_x`:  `sum_i dt cos(sqrt(2u) dX_i / sqrt(dt))`,
//! * `z_y`:  `sum_i dt cos(sqrt(2v) dY_i / sqrt(dt))`,
//!
//! summed over the day's increments. The `dY_{i+1}` in `z_xy` may cross a
//! day boundary; only the final increment of the sample has no successor and
//! is dropped. With [`DayBoundary::BreakAtDays`] (for session data) the
//! crossing summand is dropped at every day boundary instead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{check_sync_uniform, LaplacePoint};
use crate::exec;
use crate::sim::SamplePath;
use crate::stats;

/// Whether the `z_xy` summand may use the first Y increment of the next day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayBoundary {
    /// Continuous time: day boundaries are bookkeeping only (simulation).
    CrossDays,
    /// Each day is a separate session; no summand spans a boundary
    /// (empirical data with overnight gaps).
    BreakAtDays,
}

/// Per-day block statistics over a grid of Laplace points.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockStats {
    n_days: usize,
    grid: Vec<LaplacePoint>,
    // indexed [day][grid point]
    z_xy: Vec<Vec<f64>>,
    z_x: Vec<Vec<f64>>,
    z_y: Vec<Vec<f64>>,
}

impl BlockStats {
    /// Assemble from raw per-day values (used by tests that inject synthetic
    /// block series).
    pub fn from_parts(
        grid: Vec<LaplacePoint>,
        z_xy: Vec<Vec<f64>>,
        z_x: Vec<Vec<f64>>,
        z_y: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n_days = z_xy.len();
        if n_days == 0 {
            return Err(Error::data("need at least one day of blocks"));
        }
        if z_x.len() != n_days || z_y.len() != n_days {
            return Err(Error::data("block arrays must cover the same days"));
        }
        let g = grid.len();
        if g == 0 || z_xy.iter().chain(&z_x).chain(&z_y).any(|row| row.len() != g) {
            return Err(Error::data("block rows must match the grid size"));
        }
        Ok(BlockStats { n_days, grid, z_xy, z_x, z_y })
    }

    pub fn n_days(&self) -> usize {
        self.n_days
    }

    pub fn grid(&self) -> &[LaplacePoint] {
        &self.grid
    }

    pub fn z_xy(&self, day: usize, g: usize) -> f64 {
        self.z_xy[day][g]
    }

    pub fn z_x(&self, day: usize, g: usize) -> f64 {
        self.z_x[day][g]
    }

    pub fn z_y(&self, day: usize, g: usize) -> f64 {
        self.z_y[day][g]
    }

    fn mean_over_days(&self, series: &[Vec<f64>], g: usize) -> f64 {
        series.iter().map(|row| row[g]).sum::<f64>() / self.n_days as f64
    }

    pub fn mean_z_xy(&self, g: usize) -> f64 {
        self.mean_over_days(&self.z_xy, g)
    }

    pub fn mean_z_x(&self, g: usize) -> f64 {
        self.mean_over_days(&self.z_x, g)
    }

    pub fn mean_z_y(&self, g: usize) -> f64 {
        self.mean_over_days(&self.z_y, g)
    }

    /// Write as CSV with columns `day,u,v,z_xy,z_x,z_y` (day is 1-based).
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["day", "u", "v", "z_xy", "z_x", "z_y"])?;
        for t in 0..self.n_days {
            for (g, p) in self.grid.iter().enumerate() {
                wtr.write_record(&[
                    (t + 1).to_string(),
                    p.u.to_string(),
                    p.v.to_string(),
                    self.z_xy[t][g].to_string(),
                    self.z_x[t][g].to_string(),
                    self.z_y[t][g].to_string(),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Compute per-day blocks for every grid point. Requires synchronous data on
/// a uniform grid spanning an integer number of unit days.
///
/// The marginal blocks depend only on `u` (for `z_x`) or `v` (for `z_y`), so
/// they are computed once per distinct frequency and fanned out to the grid.
pub fn daily_blocks(
    x: &SamplePath,
    y: &SamplePath,
    grid: &[LaplacePoint],
    boundary: DayBoundary,
) -> Result<BlockStats> {
    if grid.is_empty() {
        return Err(Error::config("empty laplace grid"));
    }
    let (n, dt) = check_sync_uniform(x, y)?;
    let span = x.times()[n] - x.times()[0];
    let days = span.round();
    if days < 1.0 || (span - days).abs() > 1e-6 {
        return Err(Error::data(format!("data must span an integer number of days, got {span}")));
    }
    let days = days as usize;
    if n % days != 0 {
        return Err(Error::data("increments per day must be a whole number"));
    }
    let m = n / days;

    // distinct frequencies with a map from grid index
    let mut uniq_u: Vec<f64> = Vec::new();
    let mut uniq_v: Vec<f64> = Vec::new();
    let mut u_of: Vec<usize> = Vec::with_capacity(grid.len());
    let mut v_of: Vec<usize> = Vec::with_capacity(grid.len());
    for p in grid {
        u_of.push(match uniq_u.iter().position(|&w| w == p.u) {
            Some(k) => k,
            None => {
                uniq_u.push(p.u);
                uniq_u.len() - 1
            }
        });
        v_of.push(match uniq_v.iter().position(|&w| w == p.v) {
            Some(k) => k,
            None => {
                uniq_v.push(p.v);
                uniq_v.len() - 1
            }
        });
    }
    let su: Vec<f64> = uniq_u.iter().map(|u| (2.0 * u).sqrt()).collect();
    let sv: Vec<f64> = uniq_v.iter().map(|v| (2.0 * v).sqrt()).collect();
    let sp: Vec<(f64, f64)> = grid.iter().map(|p| ((2.0 * p.u).sqrt(), (2.0 * p.v).sqrt())).collect();
    let rdt = dt.sqrt();

    let per_day = exec::par_map(days, |d| {
        let lo = d * m + 1; // first increment of day d (1-based increments)
        let hi = (d + 1) * m; // last increment of day d
        let mut zxy = vec![0.0; grid.len()];
        let mut zx = vec![0.0; uniq_u.len()];
        let mut zy = vec![0.0; uniq_v.len()];
        for i in lo..=hi {
            let a = x.increment(i) / rdt;
            let b = y.increment(i) / rdt;
            for (k, s) in su.iter().enumerate() {
                zx[k] += (s * a).cos();
            }
            for (k, s) in sv.iter().enumerate() {
                zy[k] += (s * b).cos();
            }
            let cross_ok = i < n && (boundary == DayBoundary::CrossDays || i < hi);
            if cross_ok {
                let bn = y.increment(i + 1) / rdt;
                for (g, (squ, sqv)) in sp.iter().enumerate() {
                    zxy[g] += (squ * a + sqv * bn).cos();
                }
            }
        }
        for z in zxy.iter_mut() {
            *z *= dt;
        }
        let zx_full: Vec<f64> = u_of.iter().map(|&k| zx[k] * dt).collect();
        let zy_full: Vec<f64> = v_of.iter().map(|&k| zy[k] * dt).collect();
        (zxy, zx_full, zy_full)
    });

    let mut z_xy = Vec::with_capacity(days);
    let mut z_x = Vec::with_capacity(days);
    let mut z_y = Vec::with_capacity(days);
    for (a, b, c) in per_day {
        z_xy.push(a);
        z_x.push(b);
        z_y.push(c);
    }
    BlockStats::from_parts(grid.to_vec(), z_xy, z_x, z_y)
}

/// HAC kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HacKernel {
    Bartlett,
    Parzen,
}

impl std::fmt::Display for HacKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HacKernel::Bartlett => write!(f, "bartlett"),
            HacKernel::Parzen => write!(f, "parzen"),
        }
    }
}

/// Kernel and bandwidth for the long-run covariance estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HacConfig {
    pub kernel: HacKernel,
    /// Number of lags `L`; lag `i` gets weight `omega(i, L)`.
    pub bandwidth: usize,
}

impl HacConfig {
    pub fn new(kernel: HacKernel, bandwidth: usize) -> Self {
        HacConfig { kernel, bandwidth }
    }

    /// Default bandwidth rule `floor(1.2 T^{1/3})`, which satisfies the
    /// `L/sqrt(T) -> 0` side condition of the long-span CLT.
    pub fn default_bandwidth(n_days: usize) -> usize {
        (1.2 * (n_days as f64).powf(1.0 / 3.0)).floor() as usize
    }
}

/// Lag weight `omega(lag, L)`. The taper argument is `lag / (L + 1)`.
pub fn kernel_weight(cfg: &HacConfig, lag: usize) -> Result<f64> {
    if lag > cfg.bandwidth {
        return Err(Error::config(format!("lag {lag} exceeds bandwidth {}", cfg.bandwidth)));
    }
    let q = lag as f64 / (cfg.bandwidth as f64 + 1.0);
    Ok(match cfg.kernel {
        HacKernel::Bartlett => 1.0 - q,
        HacKernel::Parzen => {
            if q <= 0.5 {
                1.0 - 6.0 * q * q + 6.0 * q * q * q
            } else {
                2.0 * (1.0 - q).powi(3)
            }
        }
    })
}

/// 3x3 long-run covariance block, component order `(xy, x, y)`.
pub type Cov3 = [[f64; 3]; 3];

/// HAC long-run covariance of the three block series between grid points
/// `gp` and `gq` (indices into `blocks.grid()`):
///
/// `V_ab(p, q) = C0_ab(p, q) + sum_{i=1}^{L} w(i, L) (Ci_ab(p, q) + Ci_ba(q, p))`
///
/// with `Ci_ab(p, q) = (1/T) sum_{t=i+1}^{T} B_a,t(p) B_b,t-i(q)` on demeaned
/// blocks. The lagged correction pairs each component with its own argument
/// (`Ci_ba(q, p)`, not `Ci_ab(q, p)`): that is the estimator of the mirrored
/// population cross-term `E[A_a(0) A_b'(l)]`, it satisfies `V_ba(p, q) =
/// V_ab(q, p)` identically (so `hac_cov(p, q)` is exactly the transpose of
/// `hac_cov(q, p)`), and it preserves the Newey-West quadratic-form
/// structure, keeping the assembled grid covariance (numerically) positive
/// semidefinite for Bartlett and Parzen weights. Small negative eigenvalues
/// can still arise and are handled downstream.
pub fn hac_cov(blocks: &BlockStats, cfg: &HacConfig, gp: usize, gq: usize) -> Result<Cov3> {
    let t_days = blocks.n_days();
    if cfg.bandwidth >= t_days {
        return Err(Error::config(format!(
            "bandwidth {} must be smaller than the day count {t_days}",
            cfg.bandwidth
        )));
    }
    let demeaned = |series: fn(&BlockStats, usize, usize) -> f64, g: usize| -> Vec<f64> {
        let raw: Vec<f64> = (0..t_days).map(|t| series(blocks, t, g)).collect();
        let m = stats::mean(&raw);
        raw.iter().map(|x| x - m).collect()
    };
    // [component][day] with components (xy, x, y), at each query point
    let b_at = |g: usize| -> [Vec<f64>; 3] {
        [demeaned(BlockStats::z_xy, g), demeaned(BlockStats::z_x, g), demeaned(BlockStats::z_y, g)]
    };
    let bp = b_at(gp);
    let bq = b_at(gq);

    let c_lag = |a: &[f64], b: &[f64], lag: usize| -> f64 {
        let mut acc = 0.0;
        for t in lag..t_days {
            acc += a[t] * b[t - lag];
        }
        acc / t_days as f64
    };

    // Demeaning shrinks kernel-weighted autocovariances by roughly
    // (1 + 2 sum_l w_l)/T; undo it with the usual degrees-of-freedom factor
    // (negligible for T >> L, material for month-scale spans).
    let mut weight_sum = 0.0;
    for lag in 1..=cfg.bandwidth {
        weight_sum += kernel_weight(cfg, lag)?;
    }
    let shrink = (1.0 + 2.0 * weight_sum) / t_days as f64;
    let dof = if shrink < 0.5 { 1.0 / (1.0 - shrink) } else { 2.0 };

    let mut out = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let mut v = c_lag(&bp[a], &bq[b], 0);
            for lag in 1..=cfg.bandwidth {
                let w = kernel_weight(cfg, lag)?;
                v += w * (c_lag(&bp[a], &bq[b], lag) + c_lag(&bq[b], &bp[a], lag));
            }
            out[a][b] = dof * v;
        }
    }
    Ok(out)
}

/// Delta-method gradient of `mean z_xy - mean z_x * mean z_y` with respect to
/// the `(xy, x, y)` block means, with plug-in sample means:
/// `[1, -mean z_y, -mean z_x]`.
pub fn gamma_vec(blocks: &BlockStats, g: usize) -> [f64; 3] {
    [1.0, -blocks.mean_z_y(g), -blocks.mean_z_x(g)]
}

/// The scaled dependence statistic at one grid point:
/// `sqrt(T) (mean z_xy - mean z_x * mean z_y)`.
pub fn s_stat(blocks: &BlockStats, g: usize) -> f64 {
    let t = blocks.n_days() as f64;
    t.sqrt() * (blocks.mean_z_xy(g) - blocks.mean_z_x(g) * blocks.mean_z_y(g))
}

/// Quadratic form `gamma' V gamma` used for the pointwise variance of
/// [`s_stat`] and for the grid covariance matrix of the dependence test.
pub fn gamma_quadratic(gp: &[f64; 3], v: &Cov3, gq: &[f64; 3]) -> f64 {
    let mut acc = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            acc += gp[a] * v[a][b] * gq[b];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{preset, Preset};
    use crate::rng::stream;
    use crate::sim::{simulate_model, SimGrid};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn pt(u: f64, v: f64) -> LaplacePoint {
        LaplacePoint { u, v }
    }

    #[test]
    fn bartlett_weights() {
        let cfg = HacConfig::new(HacKernel::Bartlett, 1);
        assert_eq!(kernel_weight(&cfg, 0).unwrap(), 1.0);
        assert_eq!(kernel_weight(&cfg, 1).unwrap(), 0.5);
        assert!(kernel_weight(&cfg, 2).is_err());
        let cfg = HacConfig::new(HacKernel::Bartlett, 10);
        let mut prev = 1.0 + 1e-15;
        for lag in 0..=10 {
            let w = kernel_weight(&cfg, lag).unwrap();
            assert!((0.0..=1.0).contains(&w) && w < prev);
            prev = w;
        }
    }

    #[test]
    fn parzen_weights() {
        // q = 2/4 = 0.5 sits on the cubic branch boundary: 1 - 6/4 + 6/8
        let cfg = HacConfig::new(HacKernel::Parzen, 3);
        assert_relative_eq!(kernel_weight(&cfg, 2).unwrap(), 0.25, max_relative = 1e-15);
        assert_eq!(kernel_weight(&cfg, 0).unwrap(), 1.0);
        for lag in 0..=3 {
            let w = kernel_weight(&cfg, lag).unwrap();
            assert!((0.0..=1.0).contains(&w));
        }
    }

    #[test]
    fn default_bandwidth_rule() {
        assert_eq!(HacConfig::default_bandwidth(22), 3);
        assert_eq!(HacConfig::default_bandwidth(44), 4);
        assert_eq!(HacConfig::default_bandwidth(66), 4);
    }

    fn sim_ex4(t_days: usize, m: usize, rho_prime: f64, seed: u64, rep: u64) -> (SamplePath, SamplePath) {
        let model = preset(Preset::Ex4 { rho_prime });
        let grid = SimGrid::new(t_days as f64, t_days * m).unwrap();
        let (_, x, y) = simulate_model(&model, &grid, &mut stream(seed, rep)).unwrap();
        (x, y)
    }

    #[test]
    fn zero_frequency_blocks_equal_day_mass() {
        let (x, y) = sim_ex4(5, 40, 0.0, 60, 0);
        let blocks = daily_blocks(&x, &y, &[pt(0.0, 0.0)], DayBoundary::CrossDays).unwrap();
        let dt = 1.0 / 40.0;
        for t in 0..5 {
            // last day's xy block misses the global final increment
            let expect_xy = if t == 4 { 39.0 * dt } else { 1.0 };
            assert_relative_eq!(blocks.z_xy(t, 0), expect_xy, max_relative = 1e-12);
            assert_relative_eq!(blocks.z_x(t, 0), 1.0, max_relative = 1e-12);
            assert_relative_eq!(blocks.z_y(t, 0), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn break_at_days_drops_every_boundary_summand() {
        let (x, y) = sim_ex4(4, 30, 0.0, 61, 0);
        let blocks = daily_blocks(&x, &y, &[pt(0.0, 0.0)], DayBoundary::BreakAtDays).unwrap();
        let dt = 1.0 / 30.0;
        for t in 0..4 {
            assert_relative_eq!(blocks.z_xy(t, 0), 29.0 * dt, max_relative = 1e-12);
        }
    }

    #[test]
    fn rejects_non_integer_day_span() {
        let grid = SimGrid::new(1.5, 60).unwrap();
        let model = preset(Preset::Ex1);
        let (_, x, y) = simulate_model(&model, &grid, &mut stream(62, 0)).unwrap();
        assert!(daily_blocks(&x, &y, &[pt(0.5, 0.5)], DayBoundary::CrossDays).is_err());
    }

    #[test]
    fn constant_vol_marginal_blocks_match_laplace_oracle() {
        // sigma = 1: E z_x(0.5) = exp(-0.5) per unit day.
        use crate::sim::{simulate_prices, BivariateModelSpec, JumpSpec, OuExpVolSpec, VolModel, VolPath};
        let t_days = 50;
        let m = 100;
        let grid = SimGrid::new(t_days as f64, t_days * m).unwrap();
        let vol = VolPath::new(grid.times(), vec![1.0; t_days * m + 1], vec![1.0; t_days * m + 1]).unwrap();
        let vs = OuExpVolSpec { kappa: 1.0, a: 0.0, b: 0.0, tau0: 0.0, stationary_init: false };
        let model = BivariateModelSpec {
            drift_x: 0.0,
            drift_y: 0.0,
            rho: 0.5,
            vol: VolModel::OuExp { x: vs, y: vs },
            jump_x: JumpSpec::None,
            jump_y: JumpSpec::None,
        };
        let (x, y) = simulate_prices(&model, &vol, &mut stream(63, 0)).unwrap();
        let blocks = daily_blocks(&x, &y, &[pt(0.5, 0.5)], DayBoundary::CrossDays).unwrap();
        let per_day: Vec<f64> = (0..t_days).map(|t| blocks.z_x(t, 0)).collect();
        let mean = crate::stats::mean(&per_day);
        let se = crate::stats::sample_sd(&per_day).unwrap() / (t_days as f64).sqrt();
        let target = (-0.5f64).exp();
        assert!((mean - target).abs() < 3.0 * se, "mean {mean} vs {target} +- {}", 3.0 * se);
    }

    #[test]
    fn independent_vols_center_the_product_gap() {
        // rho' = 0: mean over days of (z_xy - z_x z_y) should be noise.
        let (x, y) = sim_ex4(100, 390, 0.0, 64, 0);
        let blocks = daily_blocks(&x, &y, &[pt(0.5, 0.5)], DayBoundary::CrossDays).unwrap();
        let gaps: Vec<f64> =
            (0..100).map(|t| blocks.z_xy(t, 0) - blocks.z_x(t, 0) * blocks.z_y(t, 0)).collect();
        let mean = crate::stats::mean(&gaps);
        let se = crate::stats::sample_sd(&gaps).unwrap() / 10.0;
        assert!(mean.abs() < 3.0 * se, "mean {mean} vs 3se {}", 3.0 * se);
    }

    fn inject_univariate(series: Vec<f64>) -> BlockStats {
        let n = series.len();
        let z_xy: Vec<Vec<f64>> = series.into_iter().map(|v| vec![v]).collect();
        let zeros: Vec<Vec<f64>> = vec![vec![0.0]; n];
        BlockStats::from_parts(vec![pt(0.5, 0.5)], z_xy, zeros.clone(), zeros).unwrap()
    }

    #[test]
    fn hac_recovers_iid_variance() {
        let mut rng = stream(65, 0);
        let t = 10_000;
        let series: Vec<f64> = (0..t).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let blocks = inject_univariate(series);
        let cfg = HacConfig::new(HacKernel::Bartlett, 3);
        let v = hac_cov(&blocks, &cfg, 0, 0).unwrap();
        assert!((v[0][0] - 1.0).abs() < 0.1, "V11 {}", v[0][0]);
    }

    #[test]
    fn hac_recovers_ar1_long_run_variance() {
        // AR(1) phi = 0.5 with marginal variance 1 has long-run variance
        // (1 + phi) / (1 - phi) = 3.
        let mut rng = stream(66, 0);
        let t = 100_000;
        let phi: f64 = 0.5;
        let innov_sd = (1.0 - phi * phi).sqrt();
        let mut series = Vec::with_capacity(t);
        let mut prev = 0.0;
        for _ in 0..t {
            prev = phi * prev + innov_sd * rng.sample::<f64, _>(StandardNormal);
            series.push(prev);
        }
        let blocks = inject_univariate(series);
        let cfg = HacConfig::new(HacKernel::Bartlett, 50);
        let v = hac_cov(&blocks, &cfg, 0, 0).unwrap();
        assert!((v[0][0] - 3.0).abs() < 0.3, "V11 {}", v[0][0]);
        // Parzen should land in the same band
        let vp = hac_cov(&blocks, &HacConfig::new(HacKernel::Parzen, 50), 0, 0).unwrap();
        assert!((vp[0][0] - 3.0).abs() < 0.3, "parzen V11 {}", vp[0][0]);
    }

    #[test]
    fn hac_zero_bandwidth_is_lag_zero_only() {
        let mut rng = stream(67, 0);
        let t = 500;
        let series: Vec<f64> = (0..t).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mean = crate::stats::mean(&series);
        let c0: f64 = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / t as f64;
        let blocks = inject_univariate(series);
        let cfg = HacConfig::new(HacKernel::Bartlett, 0);
        let v = hac_cov(&blocks, &cfg, 0, 0).unwrap();
        assert_relative_eq!(v[0][0], c0, max_relative = 1e-12);
    }

    #[test]
    fn hac_bandwidth_must_be_below_day_count() {
        let blocks = inject_univariate(vec![1.0, 2.0, 3.0]);
        let cfg = HacConfig::new(HacKernel::Bartlett, 3);
        assert!(hac_cov(&blocks, &cfg, 0, 0).is_err());
    }

    fn random_blocks(days: usize, grid: Vec<LaplacePoint>, seed: u64) -> BlockStats {
        let mut rng = stream(seed, 0);
        let g = grid.len();
        let rand_rows = |rng: &mut crate::rng::Stream| -> Vec<Vec<f64>> {
            (0..days).map(|_| (0..g).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
        };
        let z_xy = rand_rows(&mut rng);
        let z_x = rand_rows(&mut rng);
        let z_y = rand_rows(&mut rng);
        BlockStats::from_parts(grid, z_xy, z_x, z_y).unwrap()
    }

    #[test]
    fn hac_transpose_symmetry_exact() {
        let blocks = random_blocks(40, vec![pt(0.3, 0.7), pt(0.9, 0.2)], 68);
        let cfg = HacConfig::new(HacKernel::Bartlett, 4);
        let vpq = hac_cov(&blocks, &cfg, 0, 1).unwrap();
        let vqp = hac_cov(&blocks, &cfg, 1, 0).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(vpq[a][b], vqp[b][a], "({a},{b})");
            }
        }
    }

    #[test]
    fn gamma_vec_zero_frequencies() {
        let (x, y) = sim_ex4(6, 50, 0.0, 69, 0);
        let blocks = daily_blocks(&x, &y, &[pt(0.0, 0.0)], DayBoundary::CrossDays).unwrap();
        let g = gamma_vec(&blocks, 0);
        assert_eq!(g[0], 1.0);
        assert_relative_eq!(g[1], -1.0, max_relative = 1e-9);
        assert_relative_eq!(g[2], -1.0, max_relative = 1e-9);
    }

    #[test]
    fn gamma_vec_constant_vol_oracle() {
        use crate::sim::{simulate_prices, BivariateModelSpec, JumpSpec, OuExpVolSpec, VolModel, VolPath};
        let t_days = 200;
        let m = 50;
        let grid = SimGrid::new(t_days as f64, t_days * m).unwrap();
        let vol = VolPath::new(grid.times(), vec![1.0; t_days * m + 1], vec![1.0; t_days * m + 1]).unwrap();
        let vs = OuExpVolSpec { kappa: 1.0, a: 0.0, b: 0.0, tau0: 0.0, stationary_init: false };
        let model = BivariateModelSpec {
            drift_x: 0.0,
            drift_y: 0.0,
            rho: 0.0,
            vol: VolModel::OuExp { x: vs, y: vs },
            jump_x: JumpSpec::None,
            jump_y: JumpSpec::None,
        };
        let (x, y) = simulate_prices(&model, &vol, &mut stream(75, 0)).unwrap();
        let blocks = daily_blocks(&x, &y, &[pt(0.5, 0.5)], DayBoundary::CrossDays).unwrap();
        let g = gamma_vec(&blocks, 0);
        let target = -(-0.5f64).exp();
        // se of a per-day mean over 200 days
        let zx: Vec<f64> = (0..t_days).map(|t| blocks.z_x(t, 0)).collect();
        let zy: Vec<f64> = (0..t_days).map(|t| blocks.z_y(t, 0)).collect();
        let se_x = crate::stats::mean(&zx).abs().max(1e-9);
        let _ = se_x;
        let se = |v: &Vec<f64>| crate::stats::sample_sd(v).unwrap() / (t_days as f64).sqrt();
        assert!((g[1] - target).abs() < 3.0 * se(&zy), "g1 {} vs {target}", g[1]);
        assert!((g[2] - target).abs() < 3.0 * se(&zx), "g2 {} vs {target}", g[2]);
    }

    #[test]
    fn gamma_quadratic_invariant_under_component_relabeling() {
        // Exchanging the x and y marginal series permutes components 2 and 3
        // of both gamma and V; the quadratic form must not move.
        let days = 60;
        let grid = vec![pt(0.4, 0.8), pt(0.8, 0.4)];
        let blocks = random_blocks(days, grid.clone(), 70);
        let swapped = BlockStats::from_parts(
            grid,
            (0..days).map(|t| vec![blocks.z_xy(t, 0), blocks.z_xy(t, 1)]).collect(),
            (0..days).map(|t| vec![blocks.z_y(t, 0), blocks.z_y(t, 1)]).collect(),
            (0..days).map(|t| vec![blocks.z_x(t, 0), blocks.z_x(t, 1)]).collect(),
        )
        .unwrap();
        let cfg = HacConfig::new(HacKernel::Parzen, 5);
        for (gp, gq) in [(0, 0), (0, 1), (1, 1)] {
            let q1 = gamma_quadratic(
                &gamma_vec(&blocks, gp),
                &hac_cov(&blocks, &cfg, gp, gq).unwrap(),
                &gamma_vec(&blocks, gq),
            );
            let q2 = gamma_quadratic(
                &gamma_vec(&swapped, gp),
                &hac_cov(&swapped, &cfg, gp, gq).unwrap(),
                &gamma_vec(&swapped, gq),
            );
            assert_relative_eq!(q1, q2, max_relative = 1e-12);
        }
    }

    #[test]
    fn s_stat_zero_when_product_identity_holds() {
        let days = 10;
        let z_x: Vec<Vec<f64>> = vec![vec![0.8]; days];
        let z_y: Vec<Vec<f64>> = vec![vec![0.6]; days];
        let z_xy: Vec<Vec<f64>> = vec![vec![0.48]; days];
        let blocks = BlockStats::from_parts(vec![pt(0.5, 0.5)], z_xy, z_x, z_y).unwrap();
        assert!(s_stat(&blocks, 0).abs() < 1e-12);
    }

    #[test]
    fn s_stat_zero_frequency_is_near_zero() {
        let (x, y) = sim_ex4(9, 60, 0.0, 71, 0);
        let blocks = daily_blocks(&x, &y, &[pt(0.0, 0.0)], DayBoundary::CrossDays).unwrap();
        // only the dropped last increment perturbs the identity
        let bound = 3.0 * (9f64).sqrt() / 60.0;
        assert!(s_stat(&blocks, 0).abs() < bound, "{}", s_stat(&blocks, 0));
    }

    #[test]
    fn s_stat_invariant_to_price_level_shifts() {
        let (x, y) = sim_ex4(4, 30, 0.5, 72, 0);
        let blocks = daily_blocks(&x, &y, &[pt(0.5, 0.5)], DayBoundary::CrossDays).unwrap();
        let shift = |p: &SamplePath, c: f64| {
            SamplePath::new(p.times().to_vec(), p.values().iter().map(|v| v + c).collect()).unwrap()
        };
        let xs = shift(&x, 5.0);
        let ys = shift(&y, -2.0);
        let blocks2 = daily_blocks(&xs, &ys, &[pt(0.5, 0.5)], DayBoundary::CrossDays).unwrap();
        assert_relative_eq!(s_stat(&blocks, 0), s_stat(&blocks2, 0), max_relative = 1e-9);
    }

    #[test]
    fn dependence_inflates_s_stat_in_paired_reps() {
        // |s| under rho' = 0.8 should beat its rho' = 0 twin almost always.
        let reps = 200;
        let mut wins = 0;
        for r in 0..reps {
            let (x0, y0) = sim_ex4(66, 390, 0.0, 73, r);
            let (x1, y1) = sim_ex4(66, 390, 0.8, 73, r);
            let b0 = daily_blocks(&x0, &y0, &[pt(0.5, 0.5)], DayBoundary::CrossDays).unwrap();
            let b1 = daily_blocks(&x1, &y1, &[pt(0.5, 0.5)], DayBoundary::CrossDays).unwrap();
            if s_stat(&b1, 0).abs() > s_stat(&b0, 0).abs() {
                wins += 1;
            }
        }
        assert!(wins as f64 >= 0.95 * reps as f64, "wins {wins}/{reps}");
    }

    #[test]
    fn s_stat_variance_stabilizes_in_t() {
        // CLT scale: Var(s_stat) should be roughly constant across T.
        let reps = 120;
        let var_at = |t_days: usize, salt: u64| {
            let samples: Vec<f64> = (0..reps)
                .map(|r| {
                    let (x, y) = sim_ex4(t_days, 390, 0.0, 74 + salt, r);
                    let b = daily_blocks(&x, &y, &[pt(0.5, 0.5)], DayBoundary::CrossDays).unwrap();
                    s_stat(&b, 0)
                })
                .collect();
            crate::stats::sample_var(&samples).unwrap()
        };
        let v22 = var_at(22, 0);
        let v44 = var_at(44, 1);
        let v88 = var_at(88, 2);
        let r1 = v44 / v22;
        let r2 = v88 / v44;
        assert!((0.6..1.6).contains(&r1), "ratio {r1}");
        assert!((0.6..1.6).contains(&r2), "ratio {r2}");
    }
}
