//! Special functions used by the limit-theory formulas and VaR forecasts.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Gamma function on the real line, negative arguments included.
///
/// Fails at the poles `0, -1, -2, ...`.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("gamma of non-finite argument {x}")));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(Error::Domain(format!("gamma pole at {x}")));
    }
    Ok(statrs::function::gamma::gamma(x))
}

/// Standard normal quantile function.
pub fn normal_quantile(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    standard_normal().inverse_cdf(p)
}

pub fn normal_cdf(x: f64) -> f64 {
    standard_normal().cdf(x)
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal is valid")
}
