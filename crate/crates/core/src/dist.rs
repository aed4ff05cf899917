//! Random variates for the simulation designs: stable laws (zero-type,
//! "S0", parameterization), Student-t and the two-piece skewed Student-t.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::distributions::Open01;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::special::gamma_fn;

/// Stable law `S(kappa, beta_skew, scale, location)` in the S0 parameterization.
///
/// In S0 the location is continuous in `kappa`, and for `kappa > 1` the mean
/// is `location - beta_skew * scale * tan(pi * kappa / 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    kappa: f64,
    beta_skew: f64,
    scale: f64,
    location: f64,
}

impl StableParams {
    pub fn new(kappa: f64, beta_skew: f64, scale: f64, location: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa <= 2.0) {
            return Err(Error::invalid(format!(
                "stable index {kappa} outside (0, 2]"
            )));
        }
        if !(-1.0..=1.0).contains(&beta_skew) {
            return Err(Error::invalid(format!(
                "stable skewness {beta_skew} outside [-1, 1]"
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!(
                "stable scale {scale} must be positive"
            )));
        }
        if !location.is_finite() {
            return Err(Error::invalid("stable location must be finite"));
        }
        Ok(Self {
            kappa,
            beta_skew,
            scale,
            location,
        })
    }

    /// `S(kappa, 0, 1, 0)`.
    pub fn symmetric(kappa: f64) -> Result<Self> {
        Self::new(kappa, 0.0, 1.0, 0.0)
    }

    /// `S(kappa, 4/5, 1, (4/5) tan(kappa pi / 2))`: right-skewed with tail
    /// balance `p_+ = 0.9` and, for `kappa > 1`, mean zero.
    pub fn skewed_zero_mean(kappa: f64) -> Result<Self> {
        let beta = 0.8;
        Self::new(kappa, beta, 1.0, beta * (kappa * FRAC_PI_2).tan())
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn beta_skew(&self) -> f64 {
        self.beta_skew
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn location(&self) -> f64 {
        self.location
    }

    pub fn with_location(self, location: f64) -> Self {
        Self { location, ..self }
    }

    /// Right tail-balance coefficient `(1 + beta) / 2`; `None` for the Gaussian case.
    pub fn p_plus(&self) -> Option<f64> {
        (self.kappa < 2.0).then_some(0.5 * (1.0 + self.beta_skew))
    }

    /// Mean when it exists (`kappa > 1`).
    pub fn mean(&self) -> Option<f64> {
        if self.kappa <= 1.0 {
            return None;
        }
        let shift = if self.kappa == 2.0 {
            0.0
        } else {
            self.beta_skew * self.scale * (self.kappa * FRAC_PI_2).tan()
        };
        Some(self.location - shift)
    }

    /// Chambers-Mallows-Stuck draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = PI * (rng.sample::<f64, _>(Open01) - 0.5);
        let w = -rng.sample::<f64, _>(Open01).ln();
        let (a, b) = (self.kappa, self.beta_skew);
        if a == 1.0 {
            let half_pi_bu = FRAC_PI_2 + b * u;
            let x = (half_pi_bu * u.tan() - b * ((FRAC_PI_2 * w * u.cos()) / half_pi_bu).ln())
                / FRAC_PI_2;
            return self.scale * x + self.location;
        }
        let zeta = -b * (a * FRAC_PI_2).tan();
        let xi = (-zeta).atan() / a;
        let x = (1.0 + zeta * zeta).powf(0.5 / a) * (a * (u + xi)).sin() / u.cos().powf(1.0 / a)
            * ((u - a * (u + xi)).cos() / w).powf((1.0 - a) / a);
        // x is S1-standard with S0 location -zeta; adding zeta recenters it.
        self.scale * (x + zeta) + self.location
    }
}

/// Degrees of freedom and right tail weight of the two-piece skewed Student-t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewStudentParams {
    kappa: f64,
    p_plus: f64,
}

impl SkewStudentParams {
    pub fn new(kappa: f64, p_plus: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::invalid(format!(
                "degrees of freedom {kappa} must be positive"
            )));
        }
        if !(p_plus > 0.0 && p_plus < 1.0) {
            return Err(Error::invalid(format!(
                "tail weight {p_plus} outside (0, 1)"
            )));
        }
        Ok(Self { kappa, p_plus })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    /// Skew factor `(p_+ / p_-)^(1 / (2 (1 + kappa)))`. The two-piece law's
    /// right/left tail ratio is `gamma^(2 (1 + kappa))`.
    pub fn skew_factor(&self) -> f64 {
        (self.p_plus / (1.0 - self.p_plus)).powf(0.5 / (1.0 + self.kappa))
    }

    /// Mean and variance of the unstandardized two-piece law.
    fn raw_moments(&self) -> Result<(f64, f64)> {
        let nu = self.kappa;
        if nu <= 2.0 {
            return Err(Error::Domain(format!(
                "variance standardization needs more than 2 degrees of freedom, got {nu}"
            )));
        }
        let g = self.skew_factor();
        let abs_mean = 2.0 * nu.sqrt() * gamma_fn(0.5 * (nu + 1.0))?
            / (PI.sqrt() * (nu - 1.0) * gamma_fn(0.5 * nu)?);
        let mean = abs_mean * (g - 1.0 / g);
        let second = nu / (nu - 2.0) * (g.powi(3) + g.powi(-3)) / (g + 1.0 / g);
        Ok((mean, second - mean * mean))
    }
}

/// Draws `t_kappa` as `N / sqrt(chi2_kappa / kappa)`.
pub fn sample_student<R: Rng + ?Sized>(kappa: f64, rng: &mut R) -> Result<f64> {
    let chi = ChiSquared::new(kappa).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(student_draw(&chi, kappa, rng))
}

fn student_draw<R: Rng + ?Sized>(chi: &ChiSquared<f64>, kappa: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    let v: f64 = chi.sample(rng);
    z / (v / kappa).sqrt()
}

/// Sampler for the skewed Student-t, centred to mean zero and scaled to
/// variance `kappa / (kappa - 2)`.
#[derive(Debug, Clone)]
pub struct SkewStudentSampler {
    params: SkewStudentParams,
    chi: ChiSquared<f64>,
    skew: f64,
    flip_to_plus: f64,
    flip_to_minus: f64,
    mean: f64,
    scale: f64,
}

impl SkewStudentSampler {
    pub fn new(params: SkewStudentParams) -> Result<Self> {
        let nu = params.kappa;
        let (mean, var) = params.raw_moments()?;
        let scale = (nu / (nu - 2.0)).sqrt() / var.sqrt();
        let g = params.skew_factor();
        let p_pos = g * g / (1.0 + g * g);
        let chi = ChiSquared::new(nu).map_err(|e| Error::invalid(e.to_string()))?;
        Ok(Self {
            params,
            chi,
            skew: g,
            // A symmetric draw lands on each side with probability 1/2; the
            // minority side is flipped over with just enough probability to
            // give P(positive) = g^2 / (1 + g^2).
            flip_to_plus: (2.0 * p_pos - 1.0).max(0.0),
            flip_to_minus: (1.0 - 2.0 * p_pos).max(0.0),
            mean,
            scale,
        })
    }

    pub fn params(&self) -> SkewStudentParams {
        self.params
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let t = student_draw(&self.chi, self.params.kappa, rng);
        let mut positive = t >= 0.0;
        // No extra draw when the law is symmetric, so p_+ = 1/2 reproduces
        // the plain Student-t stream exactly.
        if positive && self.flip_to_minus > 0.0 {
            positive = rng.gen::<f64>() >= self.flip_to_minus;
        } else if !positive && self.flip_to_plus > 0.0 {
            positive = rng.gen::<f64>() < self.flip_to_plus;
        }
        let x = if positive {
            self.skew * t.abs()
        } else {
            -t.abs() / self.skew
        };
        (x - self.mean) * self.scale
    }
}

pub fn sample_skew_student<R: Rng + ?Sized>(params: SkewStudentParams, rng: &mut R) -> Result<f64> {
    Ok(SkewStudentSampler::new(params)?.sample(rng))
}

/// Innovation law for the simulators.
#[derive(Debug, Clone, PartialEq)]
pub enum Law {
    /// Degenerate at a point; consumes no randomness.
    Constant(f64),
    Normal {
        mean: f64,
        sd: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    Stable(StableParams),
    Student {
        kappa: f64,
    },
    SkewStudent(SkewStudentParams),
    /// `shift + X` with `X` from the inner law.
    Shifted(Box<Law>, f64),
}

impl Law {
    pub fn shifted(self, shift: f64) -> Law {
        Law::Shifted(Box::new(self), shift)
    }

    /// Validates parameters and precomputes per-law constants.
    pub fn sampler(&self) -> Result<LawSampler> {
        let inner = match self {
            Law::Constant(c) => {
                if !c.is_finite() {
                    return Err(Error::invalid("constant law must be finite"));
                }
                Inner::Constant(*c)
            }
            Law::Normal { mean, sd } => {
                if !(*sd >= 0.0 && sd.is_finite() && mean.is_finite()) {
                    return Err(Error::invalid(format!(
                        "normal law N({mean}, {sd}^2) invalid"
                    )));
                }
                Inner::Normal(*mean, *sd)
            }
            Law::Uniform { low, high } => {
                if !(low < high && low.is_finite() && high.is_finite()) {
                    return Err(Error::invalid(format!(
                        "uniform law on [{low}, {high}) invalid"
                    )));
                }
                Inner::Uniform(*low, *high)
            }
            Law::Stable(p) => Inner::Stable(*p),
            Law::Student { kappa } => Inner::Student(
                *kappa,
                ChiSquared::new(*kappa).map_err(|e| Error::invalid(e.to_string()))?,
            ),
            Law::SkewStudent(p) => Inner::SkewStudent(SkewStudentSampler::new(*p)?),
            Law::Shifted(law, shift) => {
                if !shift.is_finite() {
                    return Err(Error::invalid("shift must be finite"));
                }
                Inner::Shifted(Box::new(law.sampler()?), *shift)
            }
        };
        Ok(LawSampler { inner })
    }
}

#[derive(Debug, Clone)]
pub struct LawSampler {
    inner: Inner,
}

#[derive(Debug, Clone)]
enum Inner {
    Constant(f64),
    Normal(f64, f64),
    Uniform(f64, f64),
    Stable(StableParams),
    Student(f64, ChiSquared<f64>),
    SkewStudent(SkewStudentSampler),
    Shifted(Box<LawSampler>, f64),
}

impl LawSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.inner {
            Inner::Constant(c) => *c,
            Inner::Normal(m, s) => m + s * rng.sample::<f64, _>(StandardNormal),
            Inner::Uniform(lo, hi) => rng.gen_range(*lo..*hi),
            Inner::Stable(p) => p.sample(rng),
            Inner::Student(k, chi) => student_draw(chi, *k, rng),
            Inner::SkewStudent(s) => s.sample(rng),
            Inner::Shifted(inner, shift) => inner.sample(rng) + shift,
        }
    }

    /// The point mass of a degenerate law.
    pub(crate) fn constant_value(&self) -> Option<f64> {
        match &self.inner {
            Inner::Constant(c) => Some(*c),
            Inner::Shifted(inner, s) => inner.constant_value().map(|c| c + s),
            _ => None,
        }
    }
}
