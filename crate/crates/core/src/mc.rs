//! Monte Carlo experiment harness: estimator bias/SD/MSE tables on the
//! synchronous and asynchronous designs, size/power tables for the
//! dependence test, studentized-error samples, and histogram binning.
//!
//! Replication `r` always draws from `stream(master_seed, r)`, so every
//! experiment is reproducible bit-for-bit and independent of the worker
//! count. Replications for different scenario parameters share streams
//! (common random numbers), which tightens paired comparisons such as the
//! power-monotonicity checks.

use serde::{Deserialize, Serialize};

use crate::asymptotics::{gamma_hat_u, gamma_hat_v, studentize, CovQuery};
use crate::deptest::{limit_cov_matrix, mixture_from_cov, mixture_sample, test_statistic, DepTestConfig};
use crate::error::{Error, Result};
use crate::estimators::{estimate, u_async_hat, EstimatorKind, LaplacePoint};
use crate::exec;
use crate::longspan::{daily_blocks, HacConfig};
use crate::rng::stream;
use crate::sim::{simulate_model, simulate_model_async, true_elt, BivariateModelSpec, SimGrid};
use crate::stats;

/// Configuration of a bias/SD/MSE experiment.
#[derive(Debug, Clone)]
pub struct McConfig {
    pub model: BivariateModelSpec,
    /// Label echoed into outputs (e.g. `ex1` or a file path).
    pub dgp: String,
    pub n_reps: usize,
    pub n_steps: usize,
    pub t_end: f64,
    pub points: Vec<LaplacePoint>,
    pub kinds: Vec<EstimatorKind>,
    pub master_seed: u64,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_reps < 1 {
            return Err(Error::config("n_reps must be >= 1"));
        }
        if self.n_steps < 4 {
            return Err(Error::config("n_steps must be >= 4"));
        }
        if self.points.is_empty() || self.kinds.is_empty() {
            return Err(Error::config("need at least one laplace point and one estimator kind"));
        }
        self.model.validate()
    }
}

/// The nine Laplace points of the monthly design:
/// `u in {2.5, 3.5, 4.5} x v in {2.75, 3.75, 4.75}`.
pub fn table1_points() -> Vec<LaplacePoint> {
    let mut pts = Vec::new();
    for u in [2.5, 3.5, 4.5] {
        for v in [2.75, 3.75, 4.75] {
            pts.push(LaplacePoint { u, v });
        }
    }
    pts
}

/// Aggregated error statistics of one estimator at one Laplace point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResultRow {
    pub estimator: EstimatorKind,
    pub u: f64,
    pub v: f64,
    /// Mean of `estimate - pathwise truth` across replications.
    pub bias: f64,
    /// Sample standard deviation of the error; `None` for a single rep.
    pub sd: Option<f64>,
    /// Mean squared error, `mean((estimate - truth)^2)`.
    pub mse: f64,
    pub n_reps: usize,
}

/// Raw per-replication error samples, keyed `[kind index][point index]`.
#[derive(Debug, Clone)]
pub struct McSamples {
    pub kinds: Vec<EstimatorKind>,
    pub points: Vec<LaplacePoint>,
    pub errors: Vec<Vec<Vec<f64>>>,
}

fn aggregate(kind: EstimatorKind, p: LaplacePoint, errors: &[f64]) -> McResultRow {
    let bias = stats::mean(errors);
    let sd = stats::sample_sd(errors);
    let mse = errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64;
    McResultRow { estimator: kind, u: p.u, v: p.v, bias, sd, mse, n_reps: errors.len() }
}

/// Run the synchronous-design experiment: per replication simulate the
/// model on the uniform grid, evaluate each estimator at each point, and
/// measure errors against the pathwise truth.
pub fn run_table1(cfg: &McConfig) -> Result<(Vec<McResultRow>, McSamples)> {
    cfg.validate()?;
    let grid = SimGrid::new(cfg.t_end, cfg.n_steps)?;
    let per_rep: Vec<Result<Vec<f64>>> = exec::par_map(cfg.n_reps, |r| {
        let mut rng = stream(cfg.master_seed, r as u64);
        let (vol, x, y) = simulate_model(&cfg.model, &grid, &mut rng)?;
        let mut out = Vec::with_capacity(cfg.kinds.len() * cfg.points.len());
        for kind in &cfg.kinds {
            for p in &cfg.points {
                let truth = true_elt(&vol, p.u, p.v)?;
                out.push(estimate(*kind, &x, &y, *p)?.value - truth);
            }
        }
        Ok(out)
    });

    collect_rows(cfg, per_rep)
}

/// Run the asynchronous-design experiment: X and Y observed at independent
/// Poisson times with expected count `n_steps` over the horizon; only the
/// asynchronous estimator applies.
pub fn run_table6(cfg: &McConfig) -> Result<(Vec<McResultRow>, McSamples)> {
    cfg.validate()?;
    if cfg.kinds != vec![EstimatorKind::UAsync] {
        return Err(Error::config("the asynchronous experiment supports exactly the Uasync estimator"));
    }
    let mean_obs = cfg.n_steps as f64;
    let per_rep: Vec<Result<Vec<f64>>> = exec::par_map(cfg.n_reps, |r| {
        let mut rng = stream(cfg.master_seed, r as u64);
        let sim = simulate_model_async(&cfg.model, cfg.t_end, mean_obs, mean_obs, &mut rng)?;
        let mut out = Vec::with_capacity(cfg.points.len());
        for p in &cfg.points {
            let truth = true_elt(&sim.vol, p.u, p.v)?;
            out.push(u_async_hat(&sim.x, &sim.y, *p)?.value - truth);
        }
        Ok(out)
    });
    collect_rows(cfg, per_rep)
}

fn collect_rows(cfg: &McConfig, per_rep: Vec<Result<Vec<f64>>>) -> Result<(Vec<McResultRow>, McSamples)> {
    let mut errors = vec![vec![Vec::with_capacity(cfg.n_reps); cfg.points.len()]; cfg.kinds.len()];
    for rep in per_rep {
        let rep = rep?;
        let mut it = rep.into_iter();
        for k in 0..cfg.kinds.len() {
            for g in 0..cfg.points.len() {
                errors[k][g].push(it.next().expect("ragged replication output"));
            }
        }
    }
    let mut rows = Vec::with_capacity(cfg.kinds.len() * cfg.points.len());
    for (k, kind) in cfg.kinds.iter().enumerate() {
        for (g, p) in cfg.points.iter().enumerate() {
            rows.push(aggregate(*kind, *p, &errors[k][g]));
        }
    }
    Ok((rows, McSamples { kinds: cfg.kinds.clone(), points: cfg.points.clone(), errors }))
}

/// Studentized error samples of the synchronous estimators (V and U) at one
/// point, with the pathwise truth as the centering; used for the
/// normal-approximation diagnostics.
#[derive(Debug, Clone)]
pub struct StudentizedSamples {
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    /// Replications where the plug-in variance was nonpositive, per kind.
    pub n_floored_v: usize,
    pub n_floored_u: usize,
}

pub fn studentized_samples(
    model: &BivariateModelSpec,
    n_steps: usize,
    t_end: f64,
    point: LaplacePoint,
    n_reps: usize,
    master_seed: u64,
) -> Result<StudentizedSamples> {
    let grid = SimGrid::new(t_end, n_steps)?;
    let cq = CovQuery::diag(point);
    let per_rep: Vec<Result<[(f64, bool); 2]>> = exec::par_map(n_reps, |r| {
        let mut rng = stream(master_seed, r as u64);
        let (vol, x, y) = simulate_model(model, &grid, &mut rng)?;
        let truth = true_elt(&vol, point.u, point.v)?;
        let dt = grid.dt();
        let ev = estimate(EstimatorKind::V, &x, &y, point)?.value;
        let eu = estimate(EstimatorKind::U, &x, &y, point)?.value;
        let sv = studentize(ev, truth, gamma_hat_v(&x, &y, &cq)?, dt)?;
        let su = studentize(eu, truth, gamma_hat_u(&x, &y, &cq)?, dt)?;
        Ok([(sv.z, sv.gamma_floored), (su.z, su.gamma_floored)])
    });
    let mut out = StudentizedSamples { v: Vec::new(), u: Vec::new(), n_floored_v: 0, n_floored_u: 0 };
    for rep in per_rep {
        let [(zv, fv), (zu, fu)] = rep?;
        out.v.push(zv);
        out.u.push(zu);
        out.n_floored_v += fv as usize;
        out.n_floored_u += fu as usize;
    }
    Ok(out)
}

/// One cell of the size/power table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table5Row {
    pub rho_prime: f64,
    pub t_days: usize,
    pub steps_per_day: usize,
    pub alpha: f64,
    pub reject_rate: f64,
    pub n_reps: usize,
}

/// Size/power of the dependence test over AR(1)-volatility scenarios.
/// Replication streams are keyed by index only, so all `(rho', scenario)`
/// cells share underlying randomness (paired comparisons).
pub fn run_table5(
    base: &DepTestConfig,
    rho_primes: &[f64],
    scenarios: &[(usize, usize)],
    alphas: &[f64],
    n_reps: usize,
    master_seed: u64,
) -> Result<Vec<Table5Row>> {
    if n_reps < 1 || rho_primes.is_empty() || scenarios.is_empty() || alphas.is_empty() {
        return Err(Error::config("empty table5 request"));
    }
    for a in alphas {
        if !(*a > 0.0 && *a < 1.0) {
            return Err(Error::config(format!("alpha must lie in (0,1), got {a}")));
        }
    }
    let mut rows = Vec::new();
    for &(t_days, steps_per_day) in scenarios {
        let grid = SimGrid::new(t_days as f64, t_days * steps_per_day)?;
        let bandwidth = base.hac.bandwidth.min(t_days - 1);
        let hac = HacConfig { kernel: base.hac.kernel, bandwidth };
        for &rho_prime in rho_primes {
            let model = crate::config::preset(crate::config::Preset::Ex4 { rho_prime });
            let per_rep: Vec<Result<Vec<bool>>> = exec::par_map(n_reps, |r| {
                let mut rng = stream(master_seed, r as u64);
                let (_, x, y) = simulate_model(&model, &grid, &mut rng)?;
                let blocks = daily_blocks(&x, &y, base.grid.points(), base.boundary)?;
                let stat = test_statistic(&blocks, &base.grid)?;
                let cov = limit_cov_matrix(&blocks, &hac)?;
                let (mixture, _) = mixture_from_cov(&cov, base.grid.cell_weight())?;
                let rejections = if mixture.is_degenerate() {
                    alphas.iter().map(|_| stat >= 0.0).collect()
                } else {
                    let mut draws = mixture_sample(&mixture, base.mc_draws, &mut rng);
                    draws.sort_by(f64::total_cmp);
                    alphas
                        .iter()
                        .map(|a| stat >= stats::empirical_quantile(&draws, 1.0 - a))
                        .collect()
                };
                Ok(rejections)
            });
            let mut counts = vec![0usize; alphas.len()];
            for rep in per_rep {
                for (k, reject) in rep?.into_iter().enumerate() {
                    counts[k] += reject as usize;
                }
            }
            for (k, &alpha) in alphas.iter().enumerate() {
                rows.push(Table5Row {
                    rho_prime,
                    t_days,
                    steps_per_day,
                    alpha,
                    reject_rate: counts[k] as f64 / n_reps as f64,
                    n_reps,
                });
            }
        }
    }
    Ok(rows)
}

/// One histogram bin, left-closed (`[left, right)`, last bin closed).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistRow {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: usize,
    /// `count / (n_used * width)`; integrates to 1 over the binned samples.
    pub density: f64,
}

/// Equal-width histogram over `[lo, hi]`. Samples outside the range are
/// dropped (their count is the difference between the input length and the
/// sum of bin counts).
pub fn emit_histogram(samples: &[f64], n_bins: usize, range: (f64, f64)) -> Result<Vec<HistRow>> {
    let (lo, hi) = range;
    if samples.is_empty() {
        return Err(Error::data("cannot bin an empty sample"));
    }
    if n_bins < 2 {
        return Err(Error::config("need at least 2 bins"));
    }
    if !(hi > lo) {
        return Err(Error::config("histogram range must have positive width"));
    }
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &x in samples {
        if x < lo || x > hi || x.is_nan() {
            continue;
        }
        let k = (((x - lo) / width) as usize).min(n_bins - 1);
        counts[k] += 1;
    }
    let used: usize = counts.iter().sum();
    if used == 0 {
        return Err(Error::data("no samples fall inside the histogram range"));
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistRow {
            bin_left: lo + k as f64 * width,
            bin_right: if k + 1 == n_bins { hi } else { lo + (k + 1) as f64 * width },
            count,
            density: count as f64 / (used as f64 * width),
        })
        .collect())
}

/// Serialize result rows as CSV (full precision, shortest round-trip).
pub fn rows_to_csv(rows: &[McResultRow]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["estimator", "u", "v", "bias", "sd", "mse", "n_reps"])?;
    for r in rows {
        wtr.write_record(&[
            r.estimator.to_string(),
            r.u.to_string(),
            r.v.to_string(),
            r.bias.to_string(),
            r.sd.map(|s| s.to_string()).unwrap_or_default(),
            r.mse.to_string(),
            r.n_reps.to_string(),
        ])?;
    }
    String::from_utf8(wtr.into_inner().map_err(|e| Error::data(e.to_string()))?)
        .map_err(|e| Error::data(e.to_string()))
}

/// Serialize size/power rows as CSV.
pub fn table5_to_csv(rows: &[Table5Row]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["rho_prime", "t_days", "steps_per_day", "alpha", "reject_rate", "n_reps"])?;
    for r in rows {
        wtr.write_record(&[
            r.rho_prime.to_string(),
            r.t_days.to_string(),
            r.steps_per_day.to_string(),
            r.alpha.to_string(),
            r.reject_rate.to_string(),
            r.n_reps.to_string(),
        ])?;
    }
    String::from_utf8(wtr.into_inner().map_err(|e| Error::data(e.to_string()))?)
        .map_err(|e| Error::data(e.to_string()))
}

/// Serialize histogram rows as CSV.
pub fn hist_to_csv(rows: &[HistRow]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["bin_left", "bin_right", "count", "density"])?;
    for r in rows {
        wtr.write_record(&[
            r.bin_left.to_string(),
            r.bin_right.to_string(),
            r.count.to_string(),
            r.density.to_string(),
        ])?;
    }
    String::from_utf8(wtr.into_inner().map_err(|e| Error::data(e.to_string()))?)
        .map_err(|e| Error::data(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{preset, Preset};

    fn small_cfg(kinds: Vec<EstimatorKind>) -> McConfig {
        McConfig {
            model: preset(Preset::Ex1),
            dgp: "ex1".into(),
            n_reps: 40,
            n_steps: 200,
            t_end: 1.0,
            points: vec![LaplacePoint { u: 2.5, v: 2.75 }],
            kinds,
            master_seed: 7,
        }
    }

    #[test]
    fn mse_identity_holds() {
        let (rows, _) = run_table1(&small_cfg(vec![EstimatorKind::V, EstimatorKind::U])).unwrap();
        for r in &rows {
            let sd = r.sd.unwrap();
            let expect = r.bias * r.bias + sd * sd * (r.n_reps as f64 - 1.0) / r.n_reps as f64;
            assert!((r.mse - expect).abs() <= 1e-12 * r.mse.max(1e-30), "{} vs {expect}", r.mse);
        }
    }

    #[test]
    fn single_rep_has_no_sd() {
        let mut cfg = small_cfg(vec![EstimatorKind::V]);
        cfg.n_reps = 1;
        let (rows, samples) = run_table1(&cfg).unwrap();
        assert_eq!(rows[0].sd, None);
        assert_eq!(rows[0].n_reps, 1);
        let e = samples.errors[0][0][0];
        assert_eq!(rows[0].bias, e);
        assert_eq!(rows[0].mse, e * e);
    }

    #[test]
    fn table1_is_deterministic_and_worker_independent() {
        let cfg = small_cfg(vec![EstimatorKind::V, EstimatorKind::VPrime]);
        let (rows1, _) = run_table1(&cfg).unwrap();
        let (rows2, _) = run_table1(&cfg).unwrap();
        let csv1 = rows_to_csv(&rows1).unwrap();
        assert_eq!(csv1, rows_to_csv(&rows2).unwrap());
        let rows3 = crate::exec::with_workers(Some(2), || run_table1(&cfg).unwrap().0);
        assert_eq!(csv1, rows_to_csv(&rows3).unwrap());
    }

    #[test]
    fn table6_requires_uasync_only() {
        let mut cfg = small_cfg(vec![EstimatorKind::V]);
        cfg.n_steps = 300;
        assert!(run_table6(&cfg).is_err());
        cfg.kinds = vec![EstimatorKind::UAsync];
        let (rows, _) = run_table6(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].bias.abs() < 0.2);
    }

    #[test]
    fn histogram_binning_convention() {
        // value 0 falls in the left-closed bin [0, 1)
        let rows = emit_histogram(&[0.0, 0.0, 0.0], 2, (-1.0, 1.0)).unwrap();
        assert_eq!(rows[0].count, 0);
        assert_eq!(rows[1].count, 3);
        assert_eq!(rows[1].density, 3.0 / (3.0 * 1.0));
        // density integrates to one
        let total: f64 = rows.iter().map(|r| r.density * (r.bin_right - r.bin_left)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_density_tracks_normal_pdf() {
        use rand::Rng;
        let mut rng = crate::rng::stream(9, 0);
        let samples: Vec<f64> =
            (0..100_000).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let rows = emit_histogram(&samples, 50, (-4.0, 4.0)).unwrap();
        let total: f64 = rows.iter().map(|r| r.density * (r.bin_right - r.bin_left)).sum();
        assert!((total - 1.0).abs() < 1e-3, "integral {total}");
        let mut max_gap = 0.0f64;
        for r in &rows {
            let c = 0.5 * (r.bin_left + r.bin_right);
            let phi = (-c * c / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
            max_gap = max_gap.max((r.density - phi).abs());
        }
        assert!(max_gap < 0.02, "max density gap {max_gap}");
    }

    #[test]
    fn histogram_error_paths() {
        assert!(emit_histogram(&[], 2, (0.0, 1.0)).is_err());
        assert!(emit_histogram(&[0.5], 1, (0.0, 1.0)).is_err());
        assert!(emit_histogram(&[0.5], 2, (1.0, 0.0)).is_err());
        assert!(emit_histogram(&[5.0], 2, (0.0, 1.0)).is_err());
    }

    #[test]
    fn table5_runs_a_tiny_grid() {
        use crate::longspan::{HacConfig, HacKernel};
        let base = DepTestConfig::new(HacConfig::new(HacKernel::Bartlett, 2), 0.05, 10_000, 3).unwrap();
        let rows = run_table5(&base, &[0.0], &[(8, 30)], &[0.05, 0.10], 6, 3).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert!((0.0..=1.0).contains(&r.reject_rate));
            assert_eq!(r.n_reps, 6);
        }
        // rates at nested alphas are monotone for the same draws
        assert!(rows[0].reject_rate <= rows[1].reject_rate);
    }
}
