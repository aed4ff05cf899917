//! Test statistics: self-normalized sums, HAC and Diebold-Mariano variants,
//! the modified statistic, and the multivariate SPA statistic.

use crate::error::{Error, Result};
use crate::prefix::Window;

/// `sum(x) / sqrt(sum(x^2))`.
pub fn self_norm_stat(x: &[f64]) -> Result<f64> {
    sums(x)?.self_norm().ok_or_else(all_zero)
}

/// `(sum|x| / n) * self_norm_stat(x)`; homogeneous of degree one.
pub fn modified_stat(x: &[f64]) -> Result<f64> {
    sums(x)?.modified().ok_or_else(all_zero)
}

/// Compensated sums, accumulated exactly as the prefix tables do so that a
/// full-length window reproduces these statistics bit for bit.
fn sums(x: &[f64]) -> Result<Window> {
    if x.is_empty() {
        return Err(Error::invalid("empty series"));
    }
    Ok(Window::direct(x))
}

fn all_zero() -> Error {
    Error::Degenerate("all observations are zero".into())
}

/// `w_j = 1 - j / (q + 1)` for `j = 1..=q`.
pub fn bartlett_weights(q: usize) -> Vec<f64> {
    (1..=q).map(|j| 1.0 - j as f64 / (q as f64 + 1.0)).collect()
}

/// Newey-West rule `floor(4 (n / 100)^(2/9))`.
pub fn newey_west_lag(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

/// `gamma_0 + 2 sum_j w_j gamma_j` with autocovariances over `n`. With
/// `center` the series is demeaned first; otherwise raw cross-products are
/// used. `weights[j - 1]` is the weight of lag `j`.
pub fn hac_variance(x: &[f64], weights: &[f64], center: bool) -> Result<f64> {
    let n = x.len();
    let q = weights.len();
    if q >= n {
        return Err(Error::invalid(format!(
            "lag {q} must be below the sample size {n}"
        )));
    }
    let mean = if center {
        x.iter().sum::<f64>() / n as f64
    } else {
        0.0
    };
    let autocov = |j: usize| -> f64 {
        x[j..]
            .iter()
            .zip(x)
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / n as f64
    };
    let v = autocov(0)
        + 2.0
            * weights
                .iter()
                .enumerate()
                .map(|(j, w)| w * autocov(j + 1))
                .sum::<f64>();
    if v < 0.0 {
        return Err(Error::Domain(format!(
            "negative long-run variance estimate {v}"
        )));
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagRule {
    /// [`newey_west_lag`] of the sample size.
    Auto,
    Fixed(usize),
}

impl LagRule {
    pub fn lag(self, n: usize) -> usize {
        match self {
            LagRule::Auto => newey_west_lag(n),
            LagRule::Fixed(q) => q,
        }
    }
}

impl std::str::FromStr for LagRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(LagRule::Auto);
        }
        s.parse()
            .map(LagRule::Fixed)
            .map_err(|_| Error::invalid(format!("lag must be 'auto' or an integer, got '{s}'")))
    }
}

/// Diebold-Mariano statistic `S_n / (sqrt(n) sigma_NW)` with a centered
/// Bartlett long-run variance.
pub fn dm_statistic(x: &[f64], lag: LagRule) -> Result<f64> {
    let n = x.len();
    let q = lag.lag(n);
    let v = hac_variance(x, &bartlett_weights(q), true)?;
    if v == 0.0 {
        return Err(Error::Degenerate("zero long-run variance estimate".into()));
    }
    Ok(x.iter().sum::<f64>() / (n as f64 * v).sqrt())
}

/// Self-normalized statistic with an uncentered fixed-weight HAC
/// denominator, `S_n / sqrt(n * hac_variance(x, weights, false))`.
pub fn hac_self_norm_stat(x: &[f64], weights: &[f64]) -> Result<f64> {
    let v = hac_variance(x, weights, false)?;
    if v == 0.0 {
        return Err(Error::Degenerate("zero long-run variance estimate".into()));
    }
    Ok(x.iter().sum::<f64>() / (x.len() as f64 * v).sqrt())
}

/// Row-major `n x m` matrix of loss differentials, one column per
/// competitor.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl LossMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(
                "loss matrix needs at least one row and column",
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        crate::series::check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if let Some(c) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::LengthMismatch {
                expected: rows,
                actual: c.len(),
            });
        }
        let data = (0..rows)
            .flat_map(|t| columns.iter().map(move |c| c[t]))
            .collect();
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, t: usize, j: usize) -> f64 {
        self.data[t * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|t| self.get(t, j)).collect()
    }
}

/// `max(max_j S_j / gamma, 0)` where `gamma^2` is the sum of squares over
/// all entries: one joint normalization, not one per column.
pub fn spa_statistic(x: &LossMatrix) -> Result<f64> {
    let windows: Vec<Window> = (0..x.cols).map(|j| Window::direct(&x.column(j))).collect();
    spa_from_windows(&windows)
        .ok_or_else(|| Error::Degenerate("all loss differentials are zero".into()))
}

/// Joint statistic from per-column window sums; `None` when every entry is
/// zero.
pub(crate) fn spa_from_windows(windows: &[Window]) -> Option<f64> {
    let q: f64 = windows.iter().map(|w| w.sum_sq).sum();
    if q == 0.0 {
        return None;
    }
    let max = windows.iter().fold(f64::NEG_INFINITY, |m, w| m.max(w.sum));
    Some(max.max(0.0) / q.sqrt())
}
