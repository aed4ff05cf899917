//! AR(1) and affine stochastic-recurrence simulators with burn-in.
//!
//! Both recursions start from a fixed value at time `-burn_in`, run
//! `burn_in` discarded steps, and return the next `n` values. Burn-in
//! innovations come from an auxiliary stream and are drawn backwards in
//! time (`Z_0` first), so lengthening the burn-in only prepends older
//! shocks and leaves the returned window's innovations untouched.

use crate::dist::{Law, LawSampler};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::series::TimeSeries;

pub const DEFAULT_BURN_IN: usize = 10_000;

/// `X_t = delta + phi X_{t-1} + Z_t` with iid `Z_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ar1Spec {
    pub delta: f64,
    pub phi: f64,
    pub noise: Law,
    pub n: usize,
    pub burn_in: usize,
    pub stream: RngStream,
    /// Keep the innovations of the returned window.
    pub record_noise: bool,
}

impl Ar1Spec {
    pub fn new(delta: f64, phi: f64, noise: Law, n: usize, stream: RngStream) -> Self {
        Self {
            delta,
            phi,
            noise,
            n,
            burn_in: DEFAULT_BURN_IN,
            stream,
            record_noise: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.phi) {
            return Err(Error::invalid(format!(
                "AR coefficient {} outside [0, 1)",
                self.phi
            )));
        }
        if !self.delta.is_finite() {
            return Err(Error::invalid("intercept must be finite"));
        }
        if self.n == 0 {
            return Err(Error::invalid("sample length must be positive"));
        }
        Ok(())
    }
}

/// `X_t = A_t X_{t-1} + B_t` with iid pairs drawn in the order `A_t`, `B_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SreSpec {
    pub a: Law,
    pub b: Law,
    pub n: usize,
    pub burn_in: usize,
    pub stream: RngStream,
    pub initial: f64,
    pub record_noise: bool,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub series: TimeSeries,
    /// Innovations aligned with `series` when recording was requested
    /// (`Z_t` for AR(1), `B_t` for the SRE).
    pub noise: Option<Vec<f64>>,
    pub warnings: Vec<String>,
}

pub fn simulate_ar1(spec: &Ar1Spec) -> Result<Simulation> {
    spec.validate()?;
    let sampler = spec.noise.sampler()?;
    let (delta, phi) = (spec.delta, spec.phi);
    let mut burn = spec.stream.auxiliary(BURN_IN_TAG).generator();
    let past: Vec<f64> = (0..spec.burn_in)
        .map(|_| sampler.sample(&mut burn))
        .collect();
    let mut rng = spec.stream.generator();
    run(
        spec.n,
        0.0,
        spec.record_noise,
        past.iter().rev().map(|&z| (phi, delta + z)),
        || {
            let z = sampler.sample(&mut rng);
            (phi, delta + z, z)
        },
    )
}

/// Tag of the auxiliary stream that supplies burn-in innovations.
const BURN_IN_TAG: u64 = 0xb0b1;

/// Allocation-light AR(1) path for Monte Carlo loops: same draws and same
/// output as [`simulate_ar1`]. `scratch` holds the burn-in innovations.
pub fn fill_ar1(
    delta: f64,
    phi: f64,
    noise: &LawSampler,
    burn_in: usize,
    stream: RngStream,
    scratch: &mut Vec<f64>,
    out: &mut [f64],
) -> Result<()> {
    let mut burn = stream.auxiliary(BURN_IN_TAG).generator();
    scratch.clear();
    scratch.extend((0..burn_in).map(|_| noise.sample(&mut burn)));
    let mut x = 0.0;
    for (k, z) in scratch.iter().enumerate().rev() {
        x = phi * x + (delta + z);
        if !x.is_finite() {
            return Err(Error::NonFinite { index: -(k as i64) });
        }
    }
    let mut rng = stream.generator();
    for (t, slot) in out.iter_mut().enumerate() {
        x = phi * x + (delta + noise.sample(&mut rng));
        if !x.is_finite() {
            return Err(Error::NonFinite {
                index: t as i64 + 1,
            });
        }
        *slot = x;
    }
    Ok(())
}

pub fn simulate_sre(spec: &SreSpec) -> Result<Simulation> {
    if spec.n == 0 {
        return Err(Error::invalid("sample length must be positive"));
    }
    if !spec.initial.is_finite() {
        return Err(Error::invalid("initial value must be finite"));
    }
    let a = spec.a.sampler()?;
    let b = spec.b.sampler()?;
    let mut warnings = Vec::new();
    if let Some(w) = stationarity_check(&a, spec.stream)? {
        warnings.push(w);
    }
    let mut burn = spec.stream.auxiliary(BURN_IN_TAG).generator();
    let past: Vec<(f64, f64)> = (0..spec.burn_in)
        .map(|_| {
            let a_t = a.sample(&mut burn);
            (a_t, b.sample(&mut burn))
        })
        .collect();
    let mut rng = spec.stream.generator();
    let mut sim = run(
        spec.n,
        spec.initial,
        spec.record_noise,
        past.iter().rev().copied(),
        || {
            let a_t = a.sample(&mut rng);
            let b_t = b.sample(&mut rng);
            (a_t, b_t, b_t)
        },
    )?;
    sim.warnings = warnings;
    Ok(sim)
}

const STATIONARITY_DRAWS: usize = 10_000;

/// Checks `E[log |A|] < 0`. Degenerate `A` is checked exactly; otherwise a
/// Monte Carlo estimate on an auxiliary stream is used. An estimate that is
/// clearly positive is an error, one within two standard errors of zero a
/// warning.
fn stationarity_check(a: &LawSampler, stream: RngStream) -> Result<Option<String>> {
    if let Some(c) = a.constant_value() {
        let v = c.abs().ln();
        return if v < 0.0 {
            Ok(None)
        } else {
            Err(Error::invalid(format!(
                "E[log|A|] = {v} >= 0: recursion is not stationary"
            )))
        };
    }
    let mut rng = stream.auxiliary(0x05ee_da11).generator();
    let logs: Vec<f64> = (0..STATIONARITY_DRAWS)
        .map(|_| a.sample(&mut rng).abs().ln())
        .collect();
    if logs.iter().any(|v| !v.is_finite()) {
        return Ok(Some(
            "A has mass near zero; E[log|A|] estimate skipped".into(),
        ));
    }
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    if mean - 2.0 * se >= 0.0 {
        Err(Error::invalid(format!(
            "estimated E[log|A|] = {mean:.4} (se {se:.4}) >= 0: recursion is not stationary"
        )))
    } else if mean + 2.0 * se >= 0.0 {
        Ok(Some(format!(
            "estimated E[log|A|] = {mean:.4} (se {se:.4}) is within two standard errors of zero"
        )))
    } else {
        Ok(None)
    }
}

/// Runs `x <- a x + b` over the burn-in pairs (oldest first), then `n`
/// recorded steps. `step` yields `(a, b, innovation)`.
fn run(
    n: usize,
    initial: f64,
    record: bool,
    burn_in: impl ExactSizeIterator<Item = (f64, f64)>,
    mut step: impl FnMut() -> (f64, f64, f64),
) -> Result<Simulation> {
    let mut x = initial;
    let len = burn_in.len() as i64;
    for (i, (a, b)) in burn_in.enumerate() {
        x = a * x + b;
        if !x.is_finite() {
            return Err(Error::NonFinite {
                index: i as i64 - len + 1,
            });
        }
    }
    let mut values = Vec::with_capacity(n);
    let mut noise = record.then(|| Vec::with_capacity(n));
    for t in 0..n {
        let (a, b, z) = step();
        let next = a * x + b;
        if !next.is_finite() {
            return Err(Error::NonFinite {
                index: t as i64 + 1,
            });
        }
        x = next;
        values.push(x);
        if let Some(buf) = noise.as_mut() {
            buf.push(z);
        }
    }
    Ok(Simulation {
        series: TimeSeries::new(values)?,
        noise,
        warnings: Vec::new(),
    })
}
