//! Tick-data CSV ingestion, return rescaling, previous-tick synchronization
//! onto a per-day regular grid, and the pairwise dependence-test matrix.
//!
//! Input CSV: a header with `timestamp` and `price` columns. Timestamps are
//! either fractional-day floats or ISO-8601 datetimes; the format is
//! auto-detected from the first data row and echoed in the ingest report.
//! Calendar days (the integer part of the fractional-day time) delimit
//! trading sessions; no increment or cosine summand ever spans a session
//! boundary downstream.

use chrono::{DateTime, NaiveDateTime};
use serde::Serialize;

use crate::deptest::{run_test, DepTestConfig, TestGrid, TestReport};
use crate::error::{Error, Result};
use crate::longspan::{DayBoundary, HacConfig, HacKernel};
use crate::rng::stream;
use crate::sim::SamplePath;

/// One observed tick series with session bookkeeping. `prices` are strictly
/// positive; the log-price increments are the (possibly rescaled) returns.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSeries {
    pub symbol: String,
    times: Vec<f64>,
    prices: Vec<f64>,
    session_starts: Vec<usize>,
}

impl TickSeries {
    pub fn new(symbol: String, times: Vec<f64>, prices: Vec<f64>) -> Result<Self> {
        if times.len() < 3 {
            return Err(Error::data("tick series needs at least 3 observations"));
        }
        if times.len() != prices.len() {
            return Err(Error::data("times and prices must have equal length"));
        }
        if !times.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::data("tick times must be strictly increasing"));
        }
        if prices.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
            return Err(Error::data("prices must be positive and finite"));
        }
        let mut session_starts = vec![0usize];
        for i in 1..times.len() {
            if times[i].floor() != times[i - 1].floor() {
                session_starts.push(i);
            }
        }
        Ok(TickSeries { symbol, times, prices, session_starts })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn n_sessions(&self) -> usize {
        self.session_starts.len()
    }

    /// Half-open tick index range of session `s`.
    pub fn session_range(&self, s: usize) -> (usize, usize) {
        let lo = self.session_starts[s];
        let hi = self.session_starts.get(s + 1).copied().unwrap_or(self.times.len());
        (lo, hi)
    }

    /// Calendar key of session `s` (integer day of its first tick).
    pub fn session_key(&self, s: usize) -> i64 {
        self.times[self.session_starts[s]].floor() as i64
    }

    /// Write as `timestamp,price` CSV at full precision.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["timestamp", "price"])?;
        for (t, p) in self.times.iter().zip(&self.prices) {
            wtr.write_record(&[t.to_string(), p.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Detected timestamp format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeFormat {
    FractionalDays,
    Iso8601,
}

/// A skipped input row with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowDiagnostic {
    pub line: u64,
    pub message: String,
}

/// Result of ingesting one CSV file.
#[derive(Debug, Clone)]
pub struct IngestReport {
    pub series: TickSeries,
    pub time_format: TimeFormat,
    pub diagnostics: Vec<RowDiagnostic>,
    pub n_rows_parsed: usize,
}

fn parse_iso(ts: &str) -> Option<f64> {
    const DAY_SECONDS: f64 = 86_400.0;
    if let Ok(dt) = DateTime::parse_from_rfc3339(ts) {
        let micros = dt.timestamp_micros() as f64;
        return Some(micros / (DAY_SECONDS * 1e6));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(ts, fmt) {
            let micros = naive.and_utc().timestamp_micros() as f64;
            return Some(micros / (DAY_SECONDS * 1e6));
        }
    }
    None
}

/// Parse a tick CSV, convert to log prices, rescale the returns by
/// `rescale_factor`, and rebuild the price levels from the scaled returns
/// (per session, anchored at each session's first price). Malformed rows are
/// skipped and reported with line numbers; fewer than 3 usable rows is an
/// error. The symbol is the file stem.
pub fn ingest_csv(path: &std::path::Path, rescale_factor: f64) -> Result<IngestReport> {
    if !(rescale_factor > 0.0) || !rescale_factor.is_finite() {
        return Err(Error::config(format!("rescale factor must be positive, got {rescale_factor}")));
    }
    let symbol = path.file_stem().and_then(|s| s.to_str()).unwrap_or("series").to_string();
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let (t_col, p_col) = match (find("timestamp"), find("price")) {
        (Some(t), Some(p)) => (t, p),
        _ => return Err(Error::data(format!("{}: header must contain timestamp and price", path.display()))),
    };

    let mut time_format: Option<TimeFormat> = None;
    let mut times = Vec::new();
    let mut prices = Vec::new();
    let mut diagnostics = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let skip = |message: String, diagnostics: &mut Vec<RowDiagnostic>| {
            diagnostics.push(RowDiagnostic { line, message });
        };
        let (Some(ts), Some(ps)) = (record.get(t_col), record.get(p_col)) else {
            skip("missing fields".into(), &mut diagnostics);
            continue;
        };
        let fmt = *time_format.get_or_insert_with(|| {
            if ts.trim().parse::<f64>().is_ok() {
                TimeFormat::FractionalDays
            } else {
                TimeFormat::Iso8601
            }
        });
        let t = match fmt {
            TimeFormat::FractionalDays => ts.trim().parse::<f64>().ok(),
            TimeFormat::Iso8601 => parse_iso(ts.trim()),
        };
        let Some(t) = t.filter(|t| t.is_finite()) else {
            skip(format!("unparseable timestamp {ts:?}"), &mut diagnostics);
            continue;
        };
        let Ok(p) = ps.trim().parse::<f64>() else {
            skip(format!("unparseable price {ps:?}"), &mut diagnostics);
            continue;
        };
        if !(p > 0.0) || !p.is_finite() {
            skip(format!("non-positive price {p}"), &mut diagnostics);
            continue;
        }
        if let Some(&prev) = times.last() {
            if t <= prev {
                skip(format!("non-increasing timestamp {t}"), &mut diagnostics);
                continue;
            }
        }
        times.push(t);
        prices.push(p);
    }
    if times.len() < 3 {
        return Err(Error::data(format!("{}: fewer than 3 usable rows", path.display())));
    }

    let series = TickSeries::new(symbol, times, prices)?;
    let series = rescale_returns(series, rescale_factor)?;
    let n_rows_parsed = series.times.len();
    Ok(IngestReport {
        series,
        time_format: time_format.unwrap_or(TimeFormat::FractionalDays),
        diagnostics,
        n_rows_parsed,
    })
}

/// Multiply within-session log returns by `k` and re-accumulate price
/// levels, anchored at each session's first observed price. Session gaps are
/// never crossed, so overnight returns are untouched (and excluded from all
/// downstream increment sums).
fn rescale_returns(series: TickSeries, k: f64) -> Result<TickSeries> {
    let mut out = series.prices.clone();
    for s in 0..series.n_sessions() {
        let (lo, hi) = series.session_range(s);
        let mut w = series.prices[lo].ln();
        out[lo] = series.prices[lo];
        for i in lo + 1..hi {
            w += k * (series.prices[i].ln() - series.prices[i - 1].ln());
            out[i] = w.exp();
        }
    }
    TickSeries::new(series.symbol, series.times, out)
}

/// A synchronized pair on the per-day regular grid (times `d + j/m`, log
/// prices, overnight gaps removed by chaining sessions at their closes).
#[derive(Debug, Clone)]
pub struct AlignedPair {
    pub x: SamplePath,
    pub y: SamplePath,
    pub n_days: usize,
    /// Common sessions dropped because the overlap window was empty.
    pub n_sessions_skipped: usize,
}

/// Previous-tick synchronization of two series onto `steps_per_day` uniform
/// intervals per common trading day. Within each common session the grid
/// spans the overlap of the two series' tick windows; day `d` maps to test
/// time `[d, d+1]`. Log-price levels are chained across days so that every
/// increment of the output is an intra-session return.
pub fn align_pair(a: &TickSeries, b: &TickSeries, steps_per_day: usize) -> Result<AlignedPair> {
    if steps_per_day < 2 {
        return Err(Error::config("steps_per_day must be >= 2"));
    }
    let m = steps_per_day;
    let keys_a: std::collections::BTreeMap<i64, usize> =
        (0..a.n_sessions()).map(|s| (a.session_key(s), s)).collect();
    let mut day_values: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut skipped = 0usize;
    for sb in 0..b.n_sessions() {
        let key = b.session_key(sb);
        let Some(&sa) = keys_a.get(&key) else { continue };
        let (alo, ahi) = a.session_range(sa);
        let (blo, bhi) = b.session_range(sb);
        let lo = a.times[alo].max(b.times[blo]);
        let hi = a.times[ahi - 1].min(b.times[bhi - 1]);
        if !(hi > lo) {
            skipped += 1;
            continue;
        }
        let sample = |s: &TickSeries, slo: usize, shi: usize| -> Vec<f64> {
            (0..=m)
                .map(|j| {
                    let tau = lo + (hi - lo) * j as f64 / m as f64;
                    // last tick at or before tau, searched within the session
                    let idx = s.times[slo..shi].partition_point(|&t| t <= tau);
                    s.prices[slo + idx.saturating_sub(1).min(shi - slo - 1)].ln()
                })
                .collect()
        };
        day_values.push((sample(a, alo, ahi), sample(b, blo, bhi)));
    }
    let n_days = day_values.len();
    if n_days < 2 {
        return Err(Error::data(format!("only {n_days} common sessions with overlap")));
    }

    let mut times = Vec::with_capacity(n_days * m + 1);
    let mut xv = Vec::with_capacity(n_days * m + 1);
    let mut yv = Vec::with_capacity(n_days * m + 1);
    times.push(0.0);
    xv.push(day_values[0].0[0]);
    yv.push(day_values[0].1[0]);
    for (d, (wx, wy)) in day_values.iter().enumerate() {
        let off_x = xv.last().unwrap() - wx[0];
        let off_y = yv.last().unwrap() - wy[0];
        for j in 1..=m {
            times.push(d as f64 + j as f64 / m as f64);
            xv.push(wx[j] + off_x);
            yv.push(wy[j] + off_y);
        }
    }
    Ok(AlignedPair {
        x: SamplePath::new(times.clone(), xv)?,
        y: SamplePath::new(times, yv)?,
        n_days,
        n_sessions_skipped: skipped,
    })
}

/// Settings for the pairwise empirical test matrix.
#[derive(Debug, Clone)]
pub struct PairwiseConfig {
    pub steps_per_day: usize,
    pub kernel: HacKernel,
    /// `None` selects the default bandwidth rule from the common day count.
    pub bandwidth: Option<usize>,
    pub alpha: f64,
    pub mc_draws: usize,
    pub master_seed: u64,
    /// Pairs with fewer overlapping days are skipped with a diagnostic.
    pub min_days: usize,
}

/// One tested pair.
#[derive(Debug, Clone)]
pub struct PairResult {
    pub sym_a: String,
    pub sym_b: String,
    pub n_days: usize,
    pub report: TestReport,
}

/// All pairs plus skip diagnostics `(sym_a, sym_b, reason)`.
#[derive(Debug, Clone)]
pub struct PairwiseOutput {
    pub results: Vec<PairResult>,
    pub skipped: Vec<(String, String, String)>,
}

/// Run the dependence test on every unordered pair of series. Pair `k` (in
/// lexicographic index order) uses RNG stream `k` under the master seed.
pub fn pairwise_test_matrix(series: &[TickSeries], cfg: &PairwiseConfig) -> Result<PairwiseOutput> {
    if series.len() < 2 {
        return Err(Error::config("need at least 2 series"));
    }
    let mut results = Vec::new();
    let mut skipped = Vec::new();
    let mut pair_index = 0u64;
    for i in 0..series.len() {
        for j in i + 1..series.len() {
            let idx = pair_index;
            pair_index += 1;
            let (a, b) = (&series[i], &series[j]);
            let aligned = match align_pair(a, b, cfg.steps_per_day) {
                Ok(p) => p,
                Err(e) => {
                    skipped.push((a.symbol.clone(), b.symbol.clone(), e.to_string()));
                    continue;
                }
            };
            if aligned.n_days < cfg.min_days {
                skipped.push((
                    a.symbol.clone(),
                    b.symbol.clone(),
                    format!("only {} common days (need {})", aligned.n_days, cfg.min_days),
                ));
                continue;
            }
            let bandwidth = cfg.bandwidth.unwrap_or_else(|| HacConfig::default_bandwidth(aligned.n_days));
            let mut test_cfg = DepTestConfig::new(
                HacConfig::new(cfg.kernel, bandwidth),
                cfg.alpha,
                cfg.mc_draws,
                cfg.master_seed,
            )?;
            test_cfg.grid = TestGrid::standard();
            test_cfg.boundary = DayBoundary::BreakAtDays;
            let report = run_test(&aligned.x, &aligned.y, &test_cfg, &mut stream(cfg.master_seed, idx))?;
            results.push(PairResult {
                sym_a: a.symbol.clone(),
                sym_b: b.symbol.clone(),
                n_days: aligned.n_days,
                report,
            });
        }
    }
    Ok(PairwiseOutput { results, skipped })
}

/// Long-form CSV: one row per tested pair.
pub fn pairwise_entries_csv(out: &PairwiseOutput) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["sym_a", "sym_b", "n_days", "statistic", "critical_value", "p_value", "n_discarded_negative"])?;
    for r in &out.results {
        wtr.write_record(&[
            r.sym_a.clone(),
            r.sym_b.clone(),
            r.n_days.to_string(),
            r.report.statistic.to_string(),
            r.report.critical_value.to_string(),
            r.report.p_value.to_string(),
            r.report.n_discarded_negative.to_string(),
        ])?;
    }
    String::from_utf8(wtr.into_inner().map_err(|e| Error::data(e.to_string()))?)
        .map_err(|e| Error::data(e.to_string()))
}

/// Upper-triangular p-value matrix (the empirical table layout): one header
/// row of symbols, then one row per symbol with p-values right of the
/// diagonal and blanks elsewhere.
pub fn pairwise_matrix_csv(symbols: &[String], out: &PairwiseOutput) -> Result<String> {
    let lookup = |a: &str, b: &str| -> Option<f64> {
        out.results
            .iter()
            .find(|r| (r.sym_a == a && r.sym_b == b) || (r.sym_a == b && r.sym_b == a))
            .map(|r| r.report.p_value)
    };
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["symbol".to_string()];
    header.extend(symbols.iter().cloned());
    wtr.write_record(&header)?;
    for (i, a) in symbols.iter().enumerate() {
        let mut row = vec![a.clone()];
        for (j, b) in symbols.iter().enumerate() {
            row.push(if j <= i {
                String::new()
            } else {
                lookup(a, b).map(|p| format!("{p:.4}")).unwrap_or_default()
            });
        }
        wtr.write_record(&row)?;
    }
    String::from_utf8(wtr.into_inner().map_err(|e| Error::data(e.to_string()))?)
        .map_err(|e| Error::data(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{preset, Preset};
    use crate::rng::stream;
    use crate::sim::{simulate_model, SimGrid};

    fn write_csv_rows(rows: &[(String, String)]) -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "timestamp,price").unwrap();
        for (t, p) in rows {
            writeln!(f, "{t},{p}").unwrap();
        }
        f
    }

    /// A two-session synthetic series from the ex4 DGP, as fractional-day CSV.
    fn synthetic_series(t_days: usize, m: usize, seed: u64, rep: u64) -> TickSeries {
        let model = preset(Preset::Ex4 { rho_prime: 0.0 });
        let grid = SimGrid::new(t_days as f64, t_days * m).unwrap();
        let (_, x, _) = simulate_model(&model, &grid, &mut stream(seed, rep)).unwrap();
        // keep times within [d, d+1): drop the terminal node
        let times: Vec<f64> = x.times()[..t_days * m].to_vec();
        let prices: Vec<f64> = x.values()[..t_days * m].iter().map(|v| v.exp()).collect();
        TickSeries::new(format!("syn{seed}_{rep}"), times, prices).unwrap()
    }

    #[test]
    fn rescale_arithmetic_matches_worked_example() {
        let f = write_csv_rows(&[
            ("0.0".into(), "100".into()),
            ("0.01".into(), "101".into()),
            ("0.02".into(), "101".into()),
        ]);
        let rep = ingest_csv(f.path(), 15.0).unwrap();
        assert_eq!(rep.time_format, TimeFormat::FractionalDays);
        let w: Vec<f64> = rep.series.prices().iter().map(|p| p.ln()).collect();
        let inc = w[1] - w[0];
        assert!((inc - 15.0 * (1.01f64).ln()).abs() < 1e-12, "increment {inc}");
        assert!((inc - 0.14926).abs() < 1e-4);
        assert_eq!(w[2], w[1]);
    }

    #[test]
    fn rescale_one_is_identity_on_returns() {
        let series = synthetic_series(2, 20, 1, 0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("syn.csv");
        series.write_csv(std::fs::File::create(&path).unwrap()).unwrap();
        let rep = ingest_csv(&path, 1.0).unwrap();
        assert_eq!(rep.diagnostics.len(), 0);
        for s in 0..series.n_sessions() {
            let (lo, hi) = series.session_range(s);
            for i in lo + 1..hi {
                let orig = series.prices()[i].ln() - series.prices()[i - 1].ln();
                let got = rep.series.prices()[i].ln() - rep.series.prices()[i - 1].ln();
                assert!((got - orig).abs() <= 1e-12 * orig.abs().max(1e-12), "{got} vs {orig}");
            }
        }
    }

    #[test]
    fn malformed_rows_are_skipped_with_line_numbers() {
        let mut rows: Vec<(String, String)> = (0..500)
            .map(|i| ((i as f64 * 1e-3).to_string(), (100.0 + i as f64).to_string()))
            .collect();
        rows[99] = ("not-a-time".into(), "100".into());
        rows[200] = ("0.9".into(), "-5".into());
        let f = write_csv_rows(&rows);
        let rep = ingest_csv(f.path(), 1.0).unwrap();
        assert_eq!(rep.n_rows_parsed, 498);
        assert_eq!(rep.diagnostics.len(), 2);
        // line numbers are 1-based and include the header
        assert_eq!(rep.diagnostics[0].line, 101);
        assert_eq!(rep.diagnostics[1].line, 202);
        assert!(rep.diagnostics[1].message.contains("non-increasing") == false);
    }

    #[test]
    fn iso_timestamps_autodetect_and_split_sessions() {
        let rows: Vec<(String, String)> = vec![
            ("2019-10-01T09:30:00".into(), "100".into()),
            ("2019-10-01T09:31:00".into(), "101".into()),
            ("2019-10-01T09:32:00".into(), "102".into()),
            ("2019-10-02T09:30:00".into(), "103".into()),
            ("2019-10-02T09:31:00".into(), "104".into()),
        ];
        let f = write_csv_rows(&rows);
        let rep = ingest_csv(f.path(), 15.0).unwrap();
        assert_eq!(rep.time_format, TimeFormat::Iso8601);
        assert_eq!(rep.series.n_sessions(), 2);
        assert_eq!(rep.series.session_range(0), (0, 3));
        assert_eq!(rep.series.session_range(1), (3, 5));
    }

    #[test]
    fn missing_header_is_a_data_error() {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "time,close").unwrap();
        writeln!(f, "0.0,100").unwrap();
        assert!(matches!(ingest_csv(f.path(), 1.0), Err(Error::Data(_))));
    }

    #[test]
    fn previous_tick_sampling_picks_last_at_or_before() {
        let a = TickSeries::new(
            "a".into(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75],
            vec![1.0f64.exp(), 2.0f64.exp(), 3.0f64.exp(), 4.0f64.exp(), 5.0f64.exp(), 6.0f64.exp(), 7.0f64.exp(), 8.0f64.exp()],
        )
        .unwrap();
        let pair = align_pair(&a, &a, 2).unwrap();
        assert_eq!(pair.n_days, 2);
        // day 0 window [0, 0.75]: tau = 0, 0.375, 0.75 -> ticks 1, 2, 4
        assert_eq!(pair.x.values()[0], 1.0);
        assert_eq!(pair.x.values()[1], 2.0);
        assert_eq!(pair.x.values()[2], 4.0);
        // day 1 chained at the previous close: increments are intra-session
        let d1_first_inc = pair.x.values()[3] - pair.x.values()[2];
        assert_eq!(d1_first_inc, 6.0 - 5.0);
        assert_eq!(pair.x.times(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn self_pair_rejects_independence() {
        let series = synthetic_series(22, 90, 2, 0);
        let cfg = PairwiseConfig {
            steps_per_day: 60,
            kernel: HacKernel::Bartlett,
            bandwidth: None,
            alpha: 0.05,
            mc_draws: 10_000,
            master_seed: 5,
            min_days: 5,
        };
        let out = pairwise_test_matrix(&[series.clone(), series], &cfg).unwrap();
        assert_eq!(out.results.len(), 1);
        let p = out.results[0].report.p_value;
        assert!(p < 0.05, "self-pair p {p}");
    }

    #[test]
    fn pairwise_shape_and_skips() {
        let k = 4;
        let mut all: Vec<TickSeries> = (0..k).map(|i| synthetic_series(6, 30, 3, i as u64)).collect();
        // a fifth series on disjoint days: skipped against everyone
        let far = {
            let s = synthetic_series(3, 30, 3, 99);
            TickSeries::new("far".into(), s.times().iter().map(|t| t + 1000.0).collect(), s.prices().to_vec())
                .unwrap()
        };
        all.push(far);
        let cfg = PairwiseConfig {
            steps_per_day: 20,
            kernel: HacKernel::Bartlett,
            bandwidth: Some(1),
            alpha: 0.05,
            mc_draws: 10_000,
            master_seed: 6,
            min_days: 3,
        };
        let out = pairwise_test_matrix(&all, &cfg).unwrap();
        assert_eq!(out.results.len(), k * (k - 1) / 2);
        assert_eq!(out.skipped.len(), k);
        let symbols: Vec<String> = all.iter().map(|s| s.symbol.clone()).collect();
        let matrix = pairwise_matrix_csv(&symbols, &out).unwrap();
        assert_eq!(matrix.lines().count(), k + 2);
        let entries = pairwise_entries_csv(&out).unwrap();
        assert_eq!(entries.lines().count(), k * (k - 1) / 2 + 1);
    }
}
