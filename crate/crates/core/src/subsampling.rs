//! Subsampling critical values over all overlapping windows of length `b`.
//!
//! Covers the equal-tailed self-normalized test (with symmetric and
//! one-sided variants), the absolute modified-statistic test for the
//! undefined-mean regime, the confidence interval for the mean, and the
//! multivariate SPA test.

use crate::error::{Error, Result};
use crate::exec::{map_indices, Execution};
use crate::prefix::{PrefixTable, Window};
use crate::special::normal_quantile;
use crate::stats::{self, LagRule, LossMatrix};

/// `floor(1.5 sqrt(n))` clamped to `[2, n - 1]`.
pub fn default_block(n: usize) -> Result<usize> {
    if n < 5 {
        return Err(Error::invalid(format!(
            "need at least 5 observations, got {n}"
        )));
    }
    let b = (1.5 * (n as f64).sqrt()).floor() as usize;
    Ok(b.clamp(2, n - 1))
}

/// Smallest `k` in `1..=q` with `k / q >= y`, computed without trusting
/// `ceil(y * q)` to round correctly.
fn quantile_rank(q: usize, y: f64) -> usize {
    let qf = q as f64;
    let mut k = ((y * qf).ceil() as usize).clamp(1, q);
    while k > 1 && (k - 1) as f64 / qf >= y {
        k -= 1;
    }
    while k < q && (k as f64) / qf < y {
        k += 1;
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatisticKind {
    SelfNorm,
    /// Absolute value of the modified statistic.
    AbsModified,
    /// Self-normalized statistic of the series centered at its full mean.
    CenteredSelfNorm,
    Spa,
}

/// Sorted subsample statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsampleDistribution {
    stats: Vec<f64>,
    n: usize,
    b: usize,
    kind: StatisticKind,
    degenerate: usize,
}

impl SubsampleDistribution {
    /// Sorts `stats`; `degenerate` counts all-zero windows among them.
    pub fn from_stats(
        mut stats: Vec<f64>,
        n: usize,
        b: usize,
        kind: StatisticKind,
        degenerate: usize,
    ) -> Result<Self> {
        if stats.is_empty() {
            return Err(Error::invalid("empty subsample distribution"));
        }
        if stats.iter().any(|v| v.is_nan()) {
            return Err(Error::Domain("NaN subsample statistic".into()));
        }
        stats.sort_unstable_by(f64::total_cmp);
        Ok(Self {
            stats,
            n,
            b,
            kind,
            degenerate,
        })
    }

    pub fn stats(&self) -> &[f64] {
        &self.stats
    }

    /// Number of windows, `n - b + 1`.
    pub fn q(&self) -> usize {
        self.stats.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn block(&self) -> usize {
        self.b
    }

    pub fn kind(&self) -> StatisticKind {
        self.kind
    }

    pub fn degenerate_windows(&self) -> usize {
        self.degenerate
    }

    /// `inf { x : L(x) >= y }`, the `ceil(y q)`-th order statistic.
    pub fn quantile(&self, y: f64) -> f64 {
        self.stats[quantile_rank(self.q(), y) - 1]
    }

    /// Empirical distribution function `L(x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.stats.partition_point(|&v| v <= x) as f64 / self.q() as f64
    }
}

/// See [`SubsampleDistribution::quantile`]. `y` must lie in `(0, 1]`.
pub fn empirical_quantile(dist: &SubsampleDistribution, y: f64) -> Result<f64> {
    if !(y > 0.0 && y <= 1.0) {
        return Err(Error::invalid(format!("quantile level {y} outside (0, 1]")));
    }
    Ok(dist.quantile(y))
}

/// Window statistics of every overlapping length-`b` window, computed from
/// prefix tables and collected in window order before sorting, so the result
/// does not depend on `exec`.
pub fn subsample_distribution(
    x: &[f64],
    b: usize,
    kind: StatisticKind,
    exec: Execution,
) -> Result<SubsampleDistribution> {
    let n = x.len();
    check_block(n, b)?;
    let centered;
    let data = if kind == StatisticKind::CenteredSelfNorm {
        let mean = x.iter().sum::<f64>() / n as f64;
        centered = x.iter().map(|v| v - mean).collect::<Vec<_>>();
        &centered[..]
    } else {
        x
    };
    let table = PrefixTable::new(data)?;
    let stat = |w: Window| -> Option<f64> {
        match kind {
            StatisticKind::SelfNorm | StatisticKind::CenteredSelfNorm => w.self_norm(),
            StatisticKind::AbsModified => w.modified().map(f64::abs),
            StatisticKind::Spa => unreachable!("SPA windows need a matrix"),
        }
    };
    if kind == StatisticKind::Spa {
        return Err(Error::invalid("use spa_distribution for SPA statistics"));
    }
    let q = n - b + 1;
    let raw = map_indices(q, exec, |i| Ok(stat(table.window(i, b)?)))?;
    finish(raw, n, b, kind)
}

/// Windowed SPA statistics, one prefix table per column.
pub fn spa_distribution(
    x: &LossMatrix,
    b: usize,
    exec: Execution,
) -> Result<SubsampleDistribution> {
    let n = x.rows();
    check_block(n, b)?;
    let tables = (0..x.cols())
        .map(|j| PrefixTable::new(&x.column(j)))
        .collect::<Result<Vec<_>>>()?;
    let raw = map_indices(n - b + 1, exec, |i| {
        let windows = tables
            .iter()
            .map(|t| t.window(i, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(stats::spa_from_windows(&windows))
    })?;
    finish(raw, n, b, StatisticKind::Spa)
}

fn finish(
    raw: Vec<Option<f64>>,
    n: usize,
    b: usize,
    kind: StatisticKind,
) -> Result<SubsampleDistribution> {
    let degenerate = raw.iter().filter(|v| v.is_none()).count();
    let stats = raw.into_iter().map(|v| v.unwrap_or(0.0)).collect();
    SubsampleDistribution::from_stats(stats, n, b, kind, degenerate)
}

fn check_block(n: usize, b: usize) -> Result<()> {
    if b < 2 || b >= n {
        return Err(Error::invalid(format!(
            "block size {b} must satisfy 1 < b < n = {n}"
        )));
    }
    Ok(())
}

/// Which region of the subsampling distribution rejects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tails {
    /// Reject outside `[C(eta/2), C(1 - eta/2)]`.
    #[default]
    EqualTailed,
    /// Reject when `|T|` exceeds the `1 - eta` quantile of `|T_i|`.
    Symmetric,
    /// Reject when `T` exceeds `C(1 - eta)`.
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsampleConfig {
    /// Overrides [`default_block`].
    pub block: Option<usize>,
    pub level: f64,
    pub tails: Tails,
    pub exec: Execution,
}

impl Default for SubsampleConfig {
    fn default() -> Self {
        Self {
            block: None,
            level: 0.05,
            tails: Tails::EqualTailed,
            exec: Execution::Sequential,
        }
    }
}

impl SubsampleConfig {
    pub fn with_level(level: f64) -> Self {
        Self {
            level,
            ..Self::default()
        }
    }

    fn resolve_block(&self, n: usize) -> Result<usize> {
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::invalid(format!(
                "level {} outside (0, 1)",
                self.level
            )));
        }
        match self.block {
            Some(b) => {
                check_block(n, b)?;
                Ok(b)
            }
            None => default_block(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    DieboldMariano,
    SelfNormSubsample,
    ModifiedAbsSubsample,
    SpaSubsample,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::DieboldMariano => "dm",
            Method::SelfNormSubsample => "alg1",
            Method::ModifiedAbsSubsample => "algc1",
            Method::SpaSubsample => "spa",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Critical {
    /// Accept inside `[lower, upper]`.
    Interval { lower: f64, upper: f64 },
    /// Accept at or below the value.
    Upper(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub statistic: f64,
    pub critical: Critical,
    pub level: f64,
    pub reject: bool,
    pub method: Method,
    pub block_size: Option<usize>,
    pub degenerate_windows: usize,
}

impl TestReport {
    fn decide(
        statistic: f64,
        critical: Critical,
        level: f64,
        method: Method,
        dist: Option<&SubsampleDistribution>,
    ) -> Self {
        let reject = match critical {
            Critical::Interval { lower, upper } => statistic < lower || statistic > upper,
            Critical::Upper(c) => statistic > c,
        };
        Self {
            statistic,
            critical,
            level,
            reject,
            method,
            block_size: dist.map(|d| d.block()),
            degenerate_windows: dist.map_or(0, |d| d.degenerate_windows()),
        }
    }
}

/// Self-normalized subsampling test of `E[X] = 0`.
pub fn epa_test(x: &[f64], cfg: &SubsampleConfig) -> Result<TestReport> {
    let b = cfg.resolve_block(x.len())?;
    let t = stats::self_norm_stat(x)?;
    let eta = cfg.level;
    let (statistic, critical, dist) = match cfg.tails {
        Tails::EqualTailed => {
            let d = subsample_distribution(x, b, StatisticKind::SelfNorm, cfg.exec)?;
            let crit = Critical::Interval {
                lower: d.quantile(eta / 2.0),
                upper: d.quantile(1.0 - eta / 2.0),
            };
            (t, crit, d)
        }
        Tails::Upper => {
            let d = subsample_distribution(x, b, StatisticKind::SelfNorm, cfg.exec)?;
            let crit = Critical::Upper(d.quantile(1.0 - eta));
            (t, crit, d)
        }
        Tails::Symmetric => {
            let d = subsample_distribution(x, b, StatisticKind::SelfNorm, cfg.exec)?;
            let abs = d.stats().iter().map(|v| v.abs()).collect();
            let d = SubsampleDistribution::from_stats(abs, d.n, b, d.kind, d.degenerate)?;
            let crit = Critical::Upper(d.quantile(1.0 - eta));
            (t.abs(), crit, d)
        }
    };
    Ok(TestReport::decide(
        statistic,
        critical,
        eta,
        Method::SelfNormSubsample,
        Some(&dist),
    ))
}

/// Symmetric test on the absolute modified statistic; valid when the mean
/// may not exist.
pub fn abs_test(x: &[f64], cfg: &SubsampleConfig) -> Result<TestReport> {
    let b = cfg.resolve_block(x.len())?;
    let t = stats::modified_stat(x)?.abs();
    let d = subsample_distribution(x, b, StatisticKind::AbsModified, cfg.exec)?;
    let crit = Critical::Upper(d.quantile(1.0 - cfg.level));
    Ok(TestReport::decide(
        t,
        crit,
        cfg.level,
        Method::ModifiedAbsSubsample,
        Some(&d),
    ))
}

/// Diebold-Mariano test against normal critical values.
pub fn dm_test(x: &[f64], lag: LagRule, level: f64) -> Result<TestReport> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("level {level} outside (0, 1)")));
    }
    let t = stats::dm_statistic(x, lag)?;
    let z = normal_quantile(1.0 - level / 2.0);
    Ok(TestReport::decide(
        t,
        Critical::Interval {
            lower: -z,
            upper: z,
        },
        level,
        Method::DieboldMariano,
        None,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub block_size: usize,
    pub degenerate_windows: usize,
    /// The quantile estimates came out inverted and were swapped.
    pub reordered: bool,
}

impl ConfidenceInterval {
    pub fn contains(&self, mu: f64) -> bool {
        self.lower <= mu && mu <= self.upper
    }
}

/// Equal-tailed interval for the mean from mean-centered subsample
/// statistics: `[mean + gamma C(eta/2) / n, mean + gamma C(1 - eta/2) / n]`,
/// with `C` the quantiles of the centered window statistics and `gamma` the
/// root sum of squares of the centered series.
///
/// For a symmetric limit this matches inverting the pivot
/// `(S_n - n mu) / gamma`; for a skewed one it is that interval reflected
/// about the mean.
pub fn mean_confidence_interval(x: &[f64], cfg: &SubsampleConfig) -> Result<ConfidenceInterval> {
    let n = x.len();
    let b = cfg.resolve_block(n)?;
    crate::series::check_finite(x)?;
    let mean = x.iter().sum::<f64>() / n as f64;
    let gamma = x
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        .sqrt();
    let d = subsample_distribution(x, b, StatisticKind::CenteredSelfNorm, cfg.exec)?;
    let eta = cfg.level;
    let scale = gamma / n as f64;
    let mut lower = mean + scale * d.quantile(eta / 2.0);
    let mut upper = mean + scale * d.quantile(1.0 - eta / 2.0);
    let reordered = lower > upper;
    if reordered {
        std::mem::swap(&mut lower, &mut upper);
    }
    Ok(ConfidenceInterval {
        lower,
        upper,
        level: eta,
        block_size: b,
        degenerate_windows: d.degenerate_windows(),
        reordered,
    })
}

/// One-sided SPA test: reject when the joint statistic exceeds the
/// `1 - eta` quantile of its windowed counterparts.
pub fn spa_test(x: &LossMatrix, cfg: &SubsampleConfig) -> Result<TestReport> {
    let b = cfg.resolve_block(x.rows())?;
    let v = stats::spa_statistic(x)?;
    let d = spa_distribution(x, b, cfg.exec)?;
    let crit = Critical::Upper(d.quantile(1.0 - cfg.level));
    Ok(TestReport::decide(
        v,
        crit,
        cfg.level,
        Method::SpaSubsample,
        Some(&d),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_rule() {
        assert_eq!(default_block(10_000).unwrap(), 150);
        assert_eq!(default_block(1000).unwrap(), 47);
        assert_eq!(default_block(9).unwrap(), 4);
        assert_eq!(default_block(5).unwrap(), 3);
        assert!(default_block(4).is_err());
    }

    #[test]
    fn quantile_examples() {
        let d = SubsampleDistribution::from_stats(
            vec![4.0, 2.0, 1.0, 3.0],
            5,
            2,
            StatisticKind::SelfNorm,
            0,
        )
        .unwrap();
        assert_eq!(empirical_quantile(&d, 0.25).unwrap(), 1.0);
        assert_eq!(empirical_quantile(&d, 0.75).unwrap(), 3.0);
        assert_eq!(empirical_quantile(&d, 1.0).unwrap(), 4.0);
        assert_eq!(empirical_quantile(&d, 0.26).unwrap(), 2.0);
        assert!(empirical_quantile(&d, 0.0).is_err());
        assert_eq!(d.cdf(2.0), 0.5);
    }

    #[test]
    fn rank_is_robust_to_rounding() {
        // 0.95 * 20 evaluates to 18.999999999999996 in binary.
        assert_eq!(quantile_rank(20, 0.95), 19);
        assert_eq!(quantile_rank(20, 0.05), 1);
        assert_eq!(quantile_rank(100, 0.975), 98);
        assert_eq!(quantile_rank(7, 1.0), 7);
        for q in 1..300 {
            for y in [0.025, 0.05, 0.5, 0.95, 0.975] {
                let k = quantile_rank(q, y);
                assert!(k as f64 / q as f64 >= y);
                assert!(k == 1 || ((k - 1) as f64 / q as f64) < y);
            }
        }
    }

    #[test]
    fn window_count() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let d =
            subsample_distribution(&x, 7, StatisticKind::SelfNorm, Execution::Sequential).unwrap();
        assert_eq!(d.q(), 44);
        assert!(d.stats().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn constant_series_rejects() {
        let x = vec![0.7; 400];
        let r = epa_test(&x, &SubsampleConfig::default()).unwrap();
        assert!((r.statistic - 20.0).abs() < 1e-12);
        assert!(r.reject);
        let r = abs_test(&x, &SubsampleConfig::default()).unwrap();
        assert!(r.reject);
        assert!((r.statistic - 0.7 * 20.0).abs() < 1e-12);
    }

    #[test]
    fn constant_series_interval_is_a_point() {
        let ci = mean_confidence_interval(&[3.0; 100], &SubsampleConfig::default()).unwrap();
        assert_eq!((ci.lower, ci.upper), (3.0, 3.0));
        assert_eq!(ci.degenerate_windows, 100 - 15 + 1);
    }

    #[test]
    fn degenerate_windows_counted() {
        let mut x = vec![0.0; 60];
        x[0] = 1.0;
        x[59] = -1.0;
        let d =
            subsample_distribution(&x, 10, StatisticKind::SelfNorm, Execution::Sequential).unwrap();
        assert_eq!(d.degenerate_windows(), 51 - 2);
    }

    #[test]
    fn rejects_bad_config() {
        let x = vec![1.0, -1.0, 2.0, 0.5, -0.3, 0.1];
        let cfg = SubsampleConfig {
            block: Some(6),
            ..SubsampleConfig::default()
        };
        assert!(epa_test(&x, &cfg).is_err());
        assert!(epa_test(&x, &SubsampleConfig::with_level(1.5)).is_err());
    }

    #[test]
    fn spa_reduces_to_upper_test() {
        let x: Vec<f64> = (0..300)
            .map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0)
            .collect();
        let cfg = SubsampleConfig::default();
        let spa = spa_test(
            &LossMatrix::from_columns(std::slice::from_ref(&x)).unwrap(),
            &cfg,
        )
        .unwrap();
        let one = epa_test(
            &x,
            &SubsampleConfig {
                tails: Tails::Upper,
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(spa.statistic, one.statistic.max(0.0));
        let Critical::Upper(c) = spa.critical else {
            panic!()
        };
        let Critical::Upper(c1) = one.critical else {
            panic!()
        };
        assert_eq!(c, c1.max(0.0));
        assert_eq!(spa.reject, one.reject);
    }
}
