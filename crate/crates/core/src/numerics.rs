//! Standard normal special functions and the Gaussian moment identities used
//! by the rate formulas.
//!
//! The public functions validate their input and return [`Result`]; the
//! `pub(crate)` variants skip the check and are used on hot paths where the
//! arguments are already known to be finite.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Slack allowed when clamping a computed probability back into [0, 1].
pub const PROBABILITY_SLACK: f64 = 1e-12;

/// `1/sqrt(2*pi)`.
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// A real number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::Domain(format!("probability out of range: {value}")))
        }
    }

    /// Accepts a computed value, clamping round-off of at most
    /// [`PROBABILITY_SLACK`] and rejecting anything larger.
    pub fn from_computed(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Numerical(format!("non-finite probability {value}")));
        }
        if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&value) {
            return Err(Error::Numerical(format!(
                "probability {value:e} outside [0, 1] beyond round-off"
            )));
        }
        Ok(Probability(value.clamp(0.0, 1.0)))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Standard normal CDF, `Phi(x)`.
pub fn std_normal_cdf(x: f64) -> Result<Probability> {
    ensure_finite("x", x)?;
    Ok(Probability(phi(x)))
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    Ok(density(x))
}

/// `E|Z|^p` for `Z ~ N(0, 1)`.
pub fn abs_moment(p: f64) -> Result<f64> {
    ensure_finite("p", p)?;
    if p < 1.0 {
        return Err(Error::Domain(format!("moment order must be >= 1, got {p}")));
    }
    Ok(2f64.powf(p / 2.0) * libm::tgamma((p + 1.0) / 2.0) / PI.sqrt())
}

/// `int_{-inf}^t (t - z) phi(z) dz = t Phi(t) + phi(t)`.
pub fn trunc_moment1(t: f64) -> Result<f64> {
    ensure_finite("t", t)?;
    Ok(first_truncated_moment(t))
}

/// `int_{-inf}^t (t - z)^2 phi(z) dz = (1 + t^2) Phi(t) + t phi(t)`.
pub fn trunc_moment2(t: f64) -> Result<f64> {
    ensure_finite("t", t)?;
    Ok(second_truncated_moment(t))
}

pub(crate) fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Phi(x)`, computed without cancellation.
pub(crate) fn phi_upper(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

pub(crate) fn density(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `P(lo < Z < hi)`, taking the difference on whichever tail keeps both terms small.
pub(crate) fn normal_interval(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if lo > 0.0 {
        phi_upper(lo) - phi_upper(hi)
    } else {
        phi(hi) - phi(lo)
    }
}

pub(crate) fn first_truncated_moment(t: f64) -> f64 {
    (t * phi(t) + density(t)).max(0.0)
}

pub(crate) fn second_truncated_moment(t: f64) -> f64 {
    ((1.0 + t * t) * phi(t) + t * density(t)).max(0.0)
}
