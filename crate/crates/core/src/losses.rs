//! Forecast losses, loss differentials, and the two natively computed
//! Value-at-Risk forecasters: a rolling-window empirical quantile and a
//! GARCH(1,1) with normal innovations.

use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::series::TimeSeries;
use crate::special::normal_quantile;

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid(format!("risk level {tau} outside (0, 1)")));
    }
    Ok(())
}

/// `(tau - 1{y < q}) (y - q)`.
pub fn tick_loss(y: f64, q: f64, tau: f64) -> f64 {
    let e = y - q;
    let ind = if e < 0.0 { 1.0 } else { 0.0 };
    (tau - ind) * e
}

pub fn squared_loss(y: f64, f: f64) -> f64 {
    (y - f) * (y - f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    /// Tick loss at the forecasts' common risk level.
    Tick,
    Squared,
}

/// Quantile forecasts aligned with a target series: `values[t]` predicts
/// observation `t` from information up to `t - 1`. `None` marks positions
/// without a forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastSeries {
    pub method: String,
    pub tau: f64,
    pub values: Vec<Option<f64>>,
}

impl ForecastSeries {
    pub fn new(method: impl Into<String>, tau: f64, values: Vec<Option<f64>>) -> Result<Self> {
        check_tau(tau)?;
        if let Some(i) = values
            .iter()
            .position(|v| v.is_some_and(|v| !v.is_finite()))
        {
            return Err(Error::NonFinite { index: i as i64 });
        }
        Ok(Self {
            method: method.into(),
            tau,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `L(y_t, f1_t) - L(y_t, f2_t)` over the positions where both forecasts
/// exist; dates of `y` are carried along.
pub fn loss_differential(
    y: &TimeSeries,
    f1: &ForecastSeries,
    f2: &ForecastSeries,
    loss: Loss,
) -> Result<TimeSeries> {
    for f in [f1, f2] {
        if f.len() != y.len() {
            return Err(Error::LengthMismatch {
                expected: y.len(),
                actual: f.len(),
            });
        }
    }
    if loss == Loss::Tick && f1.tau != f2.tau {
        return Err(Error::invalid(format!(
            "forecasts target different risk levels {} and {}",
            f1.tau, f2.tau
        )));
    }
    let l = |yt: f64, q: f64| match loss {
        Loss::Tick => tick_loss(yt, q, f1.tau),
        Loss::Squared => squared_loss(yt, q),
    };
    let mut values = Vec::with_capacity(y.len());
    let mut dates = y.dates().map(|_| Vec::with_capacity(y.len()));
    for (t, (a, b)) in f1.values.iter().zip(&f2.values).enumerate() {
        if let (Some(a), Some(b)) = (a, b) {
            values.push(l(y[t], *a) - l(y[t], *b));
            if let (Some(out), Some(src)) = (dates.as_mut(), y.dates()) {
                out.push(src[t]);
            }
        }
    }
    match dates {
        Some(d) => TimeSeries::with_dates(values, d),
        None => TimeSeries::new(values),
    }
}

/// Removes observations that are exactly zero; returns the count removed.
pub fn drop_zero_returns(y: &TimeSeries) -> (TimeSeries, usize) {
    let keep: Vec<usize> = (0..y.len()).filter(|&t| y[t] != 0.0).collect();
    let dropped = y.len() - keep.len();
    let values = keep.iter().map(|&t| y[t]).collect();
    let series = match y.dates() {
        Some(d) => TimeSeries::with_dates(values, keep.iter().map(|&t| d[t]).collect()),
        None => TimeSeries::new(values),
    }
    .expect("subset of a valid series");
    (series, dropped)
}

/// Smallest `x` with empirical CDF at least `tau` over `sorted`.
pub fn lower_quantile(sorted: &[f64], tau: f64) -> f64 {
    let n = sorted.len();
    let nf = n as f64;
    let mut k = ((tau * nf).ceil() as usize).clamp(1, n);
    while k > 1 && (k - 1) as f64 / nf >= tau {
        k -= 1;
    }
    while k < n && (k as f64) / nf < tau {
        k += 1;
    }
    sorted[k - 1]
}

/// Empirical `tau`-quantile of the previous `h` returns; the first `h`
/// positions have no forecast.
pub fn rw_quantile_forecast(returns: &[f64], h: usize, tau: f64) -> Result<ForecastSeries> {
    check_tau(tau)?;
    if h == 0 || h >= returns.len() {
        return Err(Error::invalid(format!(
            "window {h} must be positive and below the series length {}",
            returns.len()
        )));
    }
    crate::series::check_finite(returns)?;
    let mut window: Vec<f64> = returns[..h].to_vec();
    window.sort_unstable_by(f64::total_cmp);
    let mut values = vec![None; h];
    for t in h..returns.len() {
        values.push(Some(lower_quantile(&window, tau)));
        let old = returns[t - h];
        let pos = window.partition_point(|v| v.total_cmp(&old).is_lt());
        window.remove(pos);
        let new = returns[t];
        let pos = window.partition_point(|v| v.total_cmp(&new).is_lt());
        window.insert(pos, new);
    }
    ForecastSeries::new(format!("RW-{h}"), tau, values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Garch11Params {
    pub mu: f64,
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Garch11Params {
    pub fn new(mu: f64, omega: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(omega > 0.0 && alpha >= 0.0 && beta >= 0.0 && alpha + beta < 1.0) || !mu.is_finite() {
            return Err(Error::invalid(format!(
                "GARCH(1,1) needs omega > 0, alpha, beta >= 0, alpha + beta < 1; got {omega}, {alpha}, {beta}"
            )));
        }
        Ok(Self {
            mu,
            omega,
            alpha,
            beta,
        })
    }

    /// `sigma^2_{t+1} = omega + alpha (y_t - mu)^2 + beta sigma^2_t`.
    pub fn next_variance(&self, sigma2: f64, y: f64) -> f64 {
        let e = y - self.mu;
        self.omega + self.alpha * e * e + self.beta * sigma2
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.alpha - self.beta)
    }

    /// Conditional variances `sigma^2_1..=sigma^2_{n+1}` starting from
    /// `sigma2_1`; the last entry is the one-step-ahead variance.
    pub fn filter(&self, y: &[f64], sigma2_1: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(y.len() + 1);
        let mut s = sigma2_1;
        out.push(s);
        for &v in y {
            s = self.next_variance(s, v);
            out.push(s);
        }
        out
    }
}

pub const GARCH_MIN_OBS: usize = 250;
const PERSISTENCE_CAP: f64 = 1.0 - 1e-6;

fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Unconstrained coordinates: `(mu, ln omega, logit(persistence), logit(alpha share))`.
fn decode(theta: &[f64]) -> Garch11Params {
    let p = PERSISTENCE_CAP * logistic(theta[2]);
    let s = logistic(theta[3]);
    Garch11Params {
        mu: theta[0],
        omega: theta[1].exp(),
        alpha: p * s,
        beta: p * (1.0 - s),
    }
}

fn sample_variance(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let m = y.iter().sum::<f64>() / n;
    y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n
}

/// Average negative Gaussian log-likelihood, constants dropped.
fn neg_loglik(p: &Garch11Params, y: &[f64], sigma2_1: f64) -> f64 {
    let mut s = sigma2_1;
    let mut acc = 0.0;
    for &v in y {
        let e = v - p.mu;
        acc += s.ln() + e * e / s;
        s = p.omega + p.alpha * e * e + p.beta * s;
    }
    0.5 * acc / y.len() as f64
}

/// Gaussian quasi-maximum likelihood for a constant-mean GARCH(1,1),
/// `sigma^2_1` fixed at the sample variance. Runs Nelder-Mead from a
/// variance-targeted start and restarts it from the best point until the
/// objective stops improving.
pub fn fit_garch11(returns: &[f64]) -> Result<Garch11Params> {
    if returns.len() < GARCH_MIN_OBS {
        return Err(Error::invalid(format!(
            "GARCH estimation needs at least {GARCH_MIN_OBS} observations, got {}",
            returns.len()
        )));
    }
    crate::series::check_finite(returns)?;
    let var = sample_variance(returns);
    let scale = returns.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if var <= (1e-10 * scale).powi(2) {
        return Err(Error::Estimation {
            iterations: 0,
            best_objective: f64::NAN,
            reason: "returns have zero variance".into(),
        });
    }
    let mean = returns.iter().sum::<f64>() / returns.len() as f64;
    let (p0, a0) = (0.95, 0.05);
    let mut theta = vec![
        mean,
        (var * (1.0 - p0)).ln(),
        logit(p0 / PERSISTENCE_CAP),
        logit(a0 / p0),
    ];
    let objective = |t: &[f64]| neg_loglik(&decode(t), returns, var);
    let opts = NelderMeadOptions {
        max_iter: 4000,
        initial_step: 0.2,
        ..Default::default()
    };
    let mut total = 0;
    let mut best = f64::INFINITY;
    const RESTARTS: usize = 6;
    for _ in 0..RESTARTS {
        let m = nelder_mead(objective, &theta, &opts);
        total += m.iterations;
        let improvement = best - m.value;
        best = best.min(m.value);
        theta = m.x;
        if m.converged && improvement <= 1e-10 * (1.0 + m.value.abs()) {
            let p = decode(&theta);
            return Garch11Params::new(p.mu, p.omega, p.alpha, p.beta);
        }
    }
    Err(Error::Estimation {
        iterations: total,
        best_objective: best,
        reason: format!("simplex did not settle after {RESTARTS} restarts"),
    })
}

/// `mu + Phi^{-1}(tau) sigma_t` with the variance filter started at the
/// sample variance of `returns`; parameters stay fixed throughout.
pub fn garch_var_forecast(
    params: &Garch11Params,
    returns: &[f64],
    tau: f64,
) -> Result<ForecastSeries> {
    check_tau(tau)?;
    if returns.is_empty() {
        return Err(Error::invalid("empty return series"));
    }
    crate::series::check_finite(returns)?;
    let z = normal_quantile(tau);
    let sigma2 = params.filter(&returns[..returns.len() - 1], sample_variance(returns));
    let values = sigma2
        .iter()
        .map(|s| Some(params.mu + z * s.sqrt()))
        .collect();
    ForecastSeries::new("G-N", tau, values)
}
