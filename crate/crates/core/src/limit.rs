//! Limit theory for the self-normalized statistic under AR(1) dynamics with
//! regularly varying noise, and tail diagnostics.
//!
//! For `X_t = phi X_{t-1} + Z_t` with tail index `kappa in (1, 2)` and tail
//! balance `p_+`, `T_n` converges to `xi / sqrt(zeta)` where `xi` is
//! `kappa`-stable and `zeta` is positive `kappa/2`-stable. The closed forms
//! below give its first two moments and the scale and skewness of `xi`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::{map_indices, Execution};
use crate::rng::RngStream;
use crate::special::gamma_fn;

fn check_limit_args(kappa: f64, phi: f64, p_plus: f64) -> Result<()> {
    if !(kappa > 1.0 && kappa < 2.0) {
        return Err(Error::invalid(format!("tail index {kappa} outside (1, 2)")));
    }
    check_phi(phi)?;
    if !(0.0..=1.0).contains(&p_plus) {
        return Err(Error::invalid(format!(
            "tail balance {p_plus} outside [0, 1]"
        )));
    }
    Ok(())
}

fn check_phi(phi: f64) -> Result<()> {
    if !(0.0..1.0).contains(&phi) {
        return Err(Error::invalid(format!(
            "AR coefficient {phi} outside [0, 1)"
        )));
    }
    Ok(())
}

/// `Gamma((1 - kappa)/2) / Gamma(1 - kappa/2)`, negative for `kappa in (1, 2)`.
fn gamma_ratio(kappa: f64) -> Result<f64> {
    Ok(gamma_fn((1.0 - kappa) / 2.0)? / gamma_fn(1.0 - kappa / 2.0)?)
}

/// `E[xi / sqrt(zeta)] = (p_+ - p_-) sqrt((1+phi)/(1-phi))
/// Gamma((1-kappa)/2) / (sqrt(pi) Gamma(1 - kappa/2))`.
pub fn ar1_limit_mean(kappa: f64, phi: f64, p_plus: f64) -> Result<f64> {
    check_limit_args(kappa, phi, p_plus)?;
    let beta = 2.0 * p_plus - 1.0;
    Ok(beta * ((1.0 + phi) / (1.0 - phi)).sqrt() * gamma_ratio(kappa)? / PI.sqrt())
}

/// `E[(xi / sqrt(zeta))^2] = ((1+phi)/(1-phi))
/// (1 + (p_+ - p_-)^2 (kappa/2) [Gamma((1-kappa)/2) / Gamma(1 - kappa/2)]^2)`.
pub fn ar1_limit_second_moment(kappa: f64, phi: f64, p_plus: f64) -> Result<f64> {
    check_limit_args(kappa, phi, p_plus)?;
    let beta = 2.0 * p_plus - 1.0;
    let r = gamma_ratio(kappa)?;
    Ok((1.0 + phi) / (1.0 - phi) * (1.0 + beta * beta * kappa / 2.0 * r * r))
}

/// `c_kappa = Gamma(2 - kappa) cos(kappa pi / 2) / (1 - kappa)`.
pub fn c_kappa(kappa: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa < 2.0) || kappa == 1.0 {
        return Err(Error::invalid(format!(
            "tail index {kappa} outside (0, 1) or (1, 2)"
        )));
    }
    Ok(gamma_fn(2.0 - kappa)? * (kappa * PI / 2.0).cos() / (1.0 - kappa))
}

/// Scale of `xi` for the AR(1): `(c_kappa (1 - phi^kappa) / (1 - phi)^kappa)^(1/kappa)`.
pub fn ar1_stable_scale(kappa: f64, phi: f64) -> Result<f64> {
    check_phi(phi)?;
    let s = c_kappa(kappa)? * (1.0 - phi.powf(kappa)) / (1.0 - phi).powf(kappa);
    Ok(s.powf(1.0 / kappa))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitMoments {
    pub mean: f64,
    pub second_moment: f64,
    pub scale: f64,
    pub skew: f64,
}

pub fn ar1_limit_moments(kappa: f64, phi: f64, p_plus: f64) -> Result<LimitMoments> {
    Ok(LimitMoments {
        mean: ar1_limit_mean(kappa, phi, p_plus)?,
        second_moment: ar1_limit_second_moment(kappa, phi, p_plus)?,
        scale: ar1_stable_scale(kappa, phi)?,
        skew: 2.0 * p_plus - 1.0,
    })
}

/// `(1 + 2 sum_j w_j phi^j)^(-1/2)`: the limit of the fixed-weight HAC
/// statistic is this factor times the limit of `T_n`.
pub fn hac_limit_factor(phi: f64, weights: &[f64]) -> Result<f64> {
    let mut p = 1.0;
    let mut acc = 1.0;
    for w in weights {
        p *= phi;
        acc += 2.0 * w * p;
    }
    if acc.is_nan() || acc <= 0.0 {
        return Err(Error::Domain(format!("non-positive radicand {acc}")));
    }
    Ok(acc.sqrt().recip())
}

const TRUNCATION: f64 = 1e-12;

/// Smallest `h` with `phi^(kappa h) < 1e-12`.
pub fn spectral_horizon(kappa: f64, phi: f64) -> usize {
    if phi == 0.0 {
        return 1;
    }
    let r = phi.powf(kappa);
    let mut h = (TRUNCATION.ln() / r.ln()).floor().max(0.0) as usize;
    while r.powi(h as i32) >= TRUNCATION {
        h += 1;
    }
    while h > 1 && r.powi(h as i32 - 1) < TRUNCATION {
        h -= 1;
    }
    h
}

/// One draw of the AR(1) spectral tail process, `Theta_t = Theta_0 phi^t`
/// for `t >= -J`, stored over `t = -J, ..., horizon - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTailPath {
    pub theta_0: f64,
    pub phi: f64,
    pub kappa: f64,
    pub j: usize,
    pub horizon: usize,
    /// `Theta_t`, index 0 is `t = -J`.
    pub theta: Vec<f64>,
    /// `Q_t = Theta_t / (sum |Theta_s|^kappa)^(1/kappa)`, normalized with the
    /// exact infinite sum.
    pub q: Vec<f64>,
}

impl SpectralTailPath {
    pub fn q_sum(&self) -> f64 {
        self.q.iter().sum()
    }
}

/// Draws `Theta_0 = +1` with probability `p_+` and `J` with
/// `P(J = j) = phi^(kappa j) (1 - phi^kappa)`.
pub fn sample_spectral_path<R: Rng + ?Sized>(
    kappa: f64,
    phi: f64,
    p_plus: f64,
    horizon: Option<usize>,
    rng: &mut R,
) -> Result<SpectralTailPath> {
    if !(kappa > 0.0 && kappa <= 2.0) {
        return Err(Error::invalid(format!("tail index {kappa} outside (0, 2]")));
    }
    check_phi(phi)?;
    if !(0.0..=1.0).contains(&p_plus) {
        return Err(Error::invalid(format!(
            "tail balance {p_plus} outside [0, 1]"
        )));
    }
    let min_h = spectral_horizon(kappa, phi);
    let horizon = horizon.unwrap_or(min_h);
    if horizon < min_h {
        return Err(Error::invalid(format!(
            "horizon {horizon} too short; need at least {min_h}"
        )));
    }
    let theta_0 = if rng.gen::<f64>() < p_plus { 1.0 } else { -1.0 };
    let r = phi.powf(kappa);
    let j = if r == 0.0 {
        0
    } else {
        let u: f64 = rng.sample(rand::distributions::Open01);
        (u.ln() / r.ln()).floor() as usize
    };
    let len = j + horizon;
    let theta: Vec<f64> = (0..len)
        .map(|s| theta_0 * phi.powi(s as i32 - j as i32))
        .collect();
    // sum_{t >= -J} |Theta_t|^kappa = phi^(-kappa J) / (1 - r), so
    // Q_t = Theta_0 phi^(t + J) (1 - r)^(1/kappa).
    let c = (1.0 - r).powf(1.0 / kappa);
    let q = (0..len).map(|s| theta_0 * phi.powi(s as i32) * c).collect();
    Ok(SpectralTailPath {
        theta_0,
        phi,
        kappa,
        j,
        horizon,
        theta,
        q,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSkewEstimate {
    pub scale: f64,
    pub scale_se: f64,
    pub skew: f64,
    pub skew_se: f64,
}

/// Monte Carlo estimates of `sigma^kappa = c_kappa E|sum Q|^kappa` and
/// `beta = E[(sum Q)_+^kappa - (sum Q)_-^kappa] / E|sum Q|^kappa`, with
/// delta-method standard errors. Path `i` uses stream `i` of `seed`.
pub fn stable_scale_skew_mc(
    kappa: f64,
    phi: f64,
    p_plus: f64,
    n_paths: usize,
    seed: u64,
    exec: Execution,
) -> Result<ScaleSkewEstimate> {
    if n_paths < 10_000 {
        return Err(Error::invalid(format!(
            "need at least 10000 paths, got {n_paths}"
        )));
    }
    let c = c_kappa(kappa)?;
    let draws = map_indices(n_paths, exec, |i| {
        let mut rng = RngStream::new(seed, i as u64).generator();
        let path = sample_spectral_path(kappa, phi, p_plus, None, &mut rng)?;
        let s = path.q_sum();
        let a = s.abs().powf(kappa);
        Ok((a, a.copysign(s)))
    })?;
    let n = n_paths as f64;
    let mean_a = draws.iter().map(|d| d.0).sum::<f64>() / n;
    let mean_s = draws.iter().map(|d| d.1).sum::<f64>() / n;
    let skew = mean_s / mean_a;
    let var = |f: &dyn Fn(&(f64, f64)) -> f64| -> f64 {
        let m = draws.iter().map(f).sum::<f64>() / n;
        draws.iter().map(|d| (f(d) - m).powi(2)).sum::<f64>() / (n - 1.0)
    };
    let skew_se = (var(&|d| d.1 - skew * d.0) / n).sqrt() / mean_a;
    let scale = (c * mean_a).powf(1.0 / kappa);
    let scale_se = scale / (kappa * mean_a) * (var(&|d| d.0) / n).sqrt();
    Ok(ScaleSkewEstimate {
        scale,
        scale_se,
        skew,
        skew_se,
    })
}

fn abs_sorted_desc(x: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    a.sort_unstable_by(|p, q| q.total_cmp(p));
    a
}

/// Hill estimator on `|x|` from the `k` largest order statistics.
pub fn hill_estimate(x: &[f64], k: usize) -> Result<f64> {
    crate::series::check_finite(x)?;
    hill_sorted(&abs_sorted_desc(x), k)
}

fn hill_sorted(desc: &[f64], k: usize) -> Result<f64> {
    let n = desc.len();
    if k < 2 || k >= n {
        return Err(Error::invalid(format!(
            "need 2 <= k < n, got k = {k}, n = {n}"
        )));
    }
    let threshold = desc[k];
    if threshold == 0.0 {
        return Err(Error::Degenerate(format!(
            "order statistic {} of |x| is zero",
            n - k
        )));
    }
    let mean_log = desc[..k].iter().map(|v| (v / threshold).ln()).sum::<f64>() / k as f64;
    if mean_log == 0.0 {
        return Err(Error::Degenerate("top order statistics are tied".into()));
    }
    Ok(mean_log.recip())
}

/// 50 log-spaced values from 10 to `floor(n / 10)`, rounded and deduplicated.
pub fn default_hill_grid(n: usize) -> Vec<usize> {
    let hi = n / 10;
    if hi < 10 {
        return Vec::new();
    }
    let (a, b) = (10f64.ln(), (hi as f64).ln());
    let mut grid: Vec<usize> = (0..50)
        .map(|i| (a + (b - a) * i as f64 / 49.0).exp().round() as usize)
        .collect();
    grid.dedup();
    grid
}

/// `(k, kappa_hat(k))` over `grid`, or [`default_hill_grid`] when `None`.
pub fn hill_plot(x: &[f64], grid: Option<&[usize]>) -> Result<Vec<(usize, f64)>> {
    crate::series::check_finite(x)?;
    let desc = abs_sorted_desc(x);
    let default;
    let grid = match grid {
        Some(g) => g,
        None => {
            default = default_hill_grid(x.len());
            if default.is_empty() {
                return Err(Error::invalid(format!(
                    "series of length {} too short for the default Hill grid",
                    x.len()
                )));
            }
            &default
        }
    };
    grid.iter()
        .map(|&k| Ok((k, hill_sorted(&desc, k)?)))
        .collect()
}

/// Writes `k,kappa_hat` rows with a header.
pub fn write_hill_csv(path: &Path, rows: &[(usize, f64)]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "k,kappa_hat")?;
    for (k, v) in rows {
        writeln!(w, "{k},{v}")?;
    }
    w.flush()?;
    Ok(())
}

pub const DEFAULT_TAIL_QUANTILE: f64 = 0.99;

/// Share of positive values among observations whose magnitude exceeds the
/// empirical `threshold_quantile` of `|x|`.
pub fn tail_balance_estimate(x: &[f64], threshold_quantile: f64) -> Result<f64> {
    if !(threshold_quantile > 0.0 && threshold_quantile < 1.0) {
        return Err(Error::invalid(format!(
            "threshold quantile {threshold_quantile} outside (0, 1)"
        )));
    }
    crate::series::check_finite(x)?;
    if x.is_empty() {
        return Err(Error::invalid("empty series"));
    }
    let mut abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    abs.sort_unstable_by(f64::total_cmp);
    let n = abs.len();
    let k = ((threshold_quantile * n as f64).ceil() as usize).clamp(1, n);
    let threshold = abs[k - 1];
    let (pos, total) = x
        .iter()
        .filter(|v| v.abs() > threshold)
        .fold((0usize, 0usize), |(p, t), v| {
            (p + (*v > 0.0) as usize, t + 1)
        });
    if total == 0 {
        return Err(Error::Degenerate(format!(
            "no observations exceed the threshold {threshold}"
        )));
    }
    Ok(pos as f64 / total as f64)
}

/// Diagnostic `a_n` with `n P(|X| > a_n) ~ 1`: the empirical `1 - 1/n`
/// quantile of `|x|` taken as the smallest order statistic whose empirical
/// distribution function exceeds `1 - 1/n`, i.e. the sample maximum.
pub fn normalizing_sequence_estimate(x: &[f64]) -> Result<f64> {
    if x.len() < 10 {
        return Err(Error::invalid(format!(
            "need at least 10 observations, got {}",
            x.len()
        )));
    }
    crate::series::check_finite(x)?;
    Ok(x.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn mean_oracles() {
        // Arbitrary-precision evaluations.
        assert!(
            rel(
                ar1_limit_mean(1.5, 0.5, 0.9).unwrap(),
                -1.056_910_931_483_489_11
            ) < 1e-12
        );
        assert!(
            rel(
                ar1_limit_mean(1.5, 0.0, 0.9).unwrap(),
                -0.610_207_810_801_450_5
            ) < 1e-12
        );
        assert!(
            rel(
                ar1_limit_mean(1.3, 0.5, 0.9).unwrap(),
                -2.277_165_628_699_304
            ) < 1e-12
        );
        for (k, phi) in [(1.2, 0.3), (1.7, 0.9)] {
            assert_eq!(ar1_limit_mean(k, phi, 0.5).unwrap(), 0.0);
        }
        let a = ar1_limit_mean(1.6, 0.0, 0.8).unwrap();
        let b = ar1_limit_mean(1.6, 0.5, 0.8).unwrap();
        assert!(rel(b / a, 3f64.sqrt()) < 1e-14);
    }

    #[test]
    fn second_moment_oracles() {
        assert!(
            rel(
                ar1_limit_second_moment(1.5, 0.5, 0.9).unwrap(),
                5.632_012_306_816_110_48
            ) < 1e-12
        );
        assert!(
            rel(
                ar1_limit_second_moment(1.5, 0.0, 0.9).unwrap(),
                1.877_337_435_605_370_16
            ) < 1e-12
        );
        assert!(
            rel(
                ar1_limit_second_moment(1.3, 0.5, 0.9).unwrap(),
                13.588_939_557_466_41
            ) < 1e-12
        );
        assert!(rel(ar1_limit_second_moment(1.4, 0.5, 0.5).unwrap(), 3.0) < 1e-15);
        assert!(rel(ar1_limit_second_moment(1.4, 0.0, 0.5).unwrap(), 1.0) < 1e-15);
        for k in [1.1, 1.3, 1.5, 1.7, 1.9] {
            for phi in [0.0, 0.5, 0.9] {
                for p in [0.0, 0.2, 0.9, 1.0] {
                    let m = ar1_limit_mean(k, phi, p).unwrap();
                    assert!(ar1_limit_second_moment(k, phi, p).unwrap() > m * m);
                }
            }
        }
        assert!(ar1_limit_mean(2.0, 0.5, 0.9).is_err());
        assert!(ar1_limit_second_moment(0.9, 0.5, 0.9).is_err());
    }

    #[test]
    fn scale_constants() {
        assert!(rel(c_kappa(1.3).unwrap(), 1.964_349_297_194_161_36) < 1e-12);
        assert!(rel(c_kappa(1.7).unwrap(), 3.807_867_836_556_049_11) < 1e-12);
        assert!(rel(c_kappa(1.5).unwrap(), 2.506_628_274_631_000_50) < 1e-12);
        assert!(
            rel(
                ar1_stable_scale(1.5, 0.5).unwrap(),
                2.759_169_578_784_175_68
            ) < 1e-12
        );
        assert!(c_kappa(1.0).is_err());
    }

    #[test]
    fn hac_factor() {
        assert_eq!(hac_limit_factor(0.7, &[]).unwrap(), 1.0);
        assert_eq!(hac_limit_factor(0.0, &[0.9, 0.3]).unwrap(), 1.0);
        assert!((hac_limit_factor(0.5, &[0.5]).unwrap() - 1.5f64.powf(-0.5)).abs() < 1e-15);
        assert!(hac_limit_factor(0.9, &[-1.0, -1.0]).is_err());
    }

    #[test]
    fn horizon_rule() {
        for (k, phi) in [(1.5, 0.5), (1.3, 0.9), (1.7, 0.1)] {
            let h = spectral_horizon(k, phi);
            let r: f64 = f64::powf(phi, k);
            assert!(r.powi(h as i32) < 1e-12);
            assert!(r.powi(h as i32 - 1) >= 1e-12);
        }
        assert_eq!(spectral_horizon(1.5, 0.0), 1);
    }

    #[test]
    fn iid_path_is_a_spike() {
        let mut rng = RngStream::new(1, 0).generator();
        for _ in 0..100 {
            let p = sample_spectral_path(1.5, 0.0, 0.7, None, &mut rng).unwrap();
            assert_eq!(p.j, 0);
            assert_eq!(p.theta.len(), 1);
            assert_eq!(p.q[0].abs(), 1.0);
        }
    }

    #[test]
    fn q_paths_are_normalized() {
        let mut rng = RngStream::new(2, 0).generator();
        for (k, phi) in [(1.5, 0.5), (1.3, 0.9), (0.7, 0.3)] {
            for _ in 0..200 {
                let p = sample_spectral_path(k, phi, 0.9, None, &mut rng).unwrap();
                let s: f64 = p.q.iter().map(|v| v.abs().powf(k)).sum();
                assert!((s - 1.0).abs() < 1e-10, "{s}");
            }
        }
        let mut rng = RngStream::new(2, 1).generator();
        assert!(sample_spectral_path(1.5, 0.5, 0.9, Some(3), &mut rng).is_err());
    }

    #[test]
    fn geometric_lead_length() {
        let (k, phi) = (1.5f64, 0.5f64);
        let p0 = 1.0 - phi.powf(k);
        let m = 100_000;
        let mut rng = RngStream::new(3, 0).generator();
        let zeros = (0..m)
            .filter(|_| sample_spectral_path(k, phi, 0.5, None, &mut rng).unwrap().j == 0)
            .count();
        let se = (p0 * (1.0 - p0) / m as f64).sqrt();
        assert!((zeros as f64 / m as f64 - p0).abs() < 3.0 * se);
    }

    #[test]
    fn scale_and_skew_by_simulation() {
        let est = stable_scale_skew_mc(1.5, 0.5, 0.5, 20_000, 9, Execution::Sequential).unwrap();
        assert!(est.skew.abs() < 3.0 * est.skew_se);
        // Paths are cut where phi^(kappa h) < 1e-12, leaving phi^h ~ 1e-8.
        assert!(rel(est.scale, ar1_stable_scale(1.5, 0.5).unwrap()) < 1e-7);
        let one = stable_scale_skew_mc(1.5, 0.0, 1.0, 10_000, 9, Execution::Sequential).unwrap();
        assert_eq!(one.skew, 1.0);
        assert!(stable_scale_skew_mc(1.5, 0.0, 1.0, 100, 9, Execution::Sequential).is_err());
    }

    #[test]
    fn hill_examples() {
        let e = std::f64::consts::E;
        let x = [e.powi(3), e.powi(2), e, 1.0];
        assert!((hill_estimate(&x, 2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(hill_estimate(&x, 4).is_err());
        assert!(hill_estimate(&[3.0, 2.0, 0.0, 0.0], 2).is_err());
        let y = [1.5, -0.2, 7.0, 3.3, -9.1, 0.4, 2.2];
        let scaled: Vec<f64> = y.iter().map(|v| 4.0 * v).collect();
        assert_eq!(
            hill_estimate(&y, 3).unwrap(),
            hill_estimate(&scaled, 3).unwrap()
        );
    }

    #[test]
    fn hill_grid() {
        let g = default_hill_grid(10_000);
        assert_eq!(g.first(), Some(&10));
        assert_eq!(g.last(), Some(&1000));
        assert_eq!(g.len(), 50);
        assert!(default_hill_grid(50).is_empty());
    }

    #[test]
    fn tail_balance_examples() {
        // 100 small values, then exceedances +5, +6, -7.
        let mut x = vec![0.1; 100];
        x.extend([5.0, 6.0, -7.0]);
        let t = tail_balance_estimate(&x, 0.97).unwrap();
        assert!((t - 2.0 / 3.0).abs() < 1e-15);
        let sym: Vec<f64> = (1..=500).flat_map(|i| [i as f64, -(i as f64)]).collect();
        assert_eq!(tail_balance_estimate(&sym, 0.99).unwrap(), 0.5);
        assert!(tail_balance_estimate(&[1.0; 50], 0.99).is_err());
    }

    #[test]
    fn normalizing_sequence() {
        let x: Vec<f64> = (1..=40).map(f64::from).collect();
        assert_eq!(normalizing_sequence_estimate(&x).unwrap(), 40.0);
        let scaled: Vec<f64> = x.iter().map(|v| -2.5 * v).collect();
        assert_eq!(normalizing_sequence_estimate(&scaled).unwrap(), 100.0);
        assert!(normalizing_sequence_estimate(&x[..5]).is_err());
    }
}
