//! Standard normal density and tail, and the Gaussian tail bounds the
//! rounding analysis relies on.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBounds {
    pub lower: f64,
    pub upper: f64,
}

impl TailBounds {
    pub fn contains(&self, p: f64) -> bool {
        self.lower <= p && p <= self.upper
    }

    pub fn strictly_contains(&self, p: f64) -> bool {
        self.lower < p && p < self.upper
    }
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `Pr[Z >= tau]` for `Z ~ N(0, 1)`.
///
/// Computed as `erfc(tau / sqrt 2) / 2`, which keeps full relative precision
/// far into the upper tail where `1 - cdf` would cancel to zero.
pub fn std_normal_tail(tau: f64) -> f64 {
    0.5 * erfc(tau / std::f64::consts::SQRT_2)
}

fn require_tau(tau: f64) -> Result<()> {
    if tau >= 2.0 {
        Ok(())
    } else {
        Err(Error::TauTooSmall(tau))
    }
}

/// `phi(tau) / (2 tau) <= Pr[Z >= tau] <= phi(tau) / tau`, valid for `tau >= 2`.
pub fn univariate_tail_bounds(tau: f64) -> Result<TailBounds> {
    require_tau(tau)?;
    let phi = std_normal_pdf(tau);
    Ok(TailBounds {
        lower: phi / (2.0 * tau),
        upper: phi / tau,
    })
}

/// Lower bound `phi(tau)^2 / (4 tau^2)` on `Pr[X >= tau, Y >= tau]` for
/// standard normals with non-negative correlation.
pub fn bivariate_tail_lower(tau: f64) -> Result<f64> {
    require_tau(tau)?;
    Ok(pos_corr_lower(tau))
}

/// Upper bound `(sqrt(pi) / tau) phi(tau)^2 exp(rho tau^2)` on
/// `Pr[X >= tau, Y >= tau]` for correlation `-1 < rho < 0`.
pub fn bivariate_tail_upper(tau: f64, rho: f64) -> Result<f64> {
    require_tau(tau)?;
    if !(rho > -1.0 && rho < 0.0) {
        return Err(Error::BadCorrelation(rho));
    }
    Ok(neg_corr_upper(tau, rho))
}

/// Formula behind [`bivariate_tail_lower`] without the `tau >= 2` guard, for
/// reporting at small `tau` where the bound is no longer proven.
pub(crate) fn pos_corr_lower(tau: f64) -> f64 {
    let phi = std_normal_pdf(tau);
    phi * phi / (4.0 * tau * tau)
}

pub(crate) fn neg_corr_upper(tau: f64, rho: f64) -> f64 {
    let phi = std_normal_pdf(tau);
    PI.sqrt() / tau * phi * phi * (rho * tau * tau).exp()
}

/// `d` independent standard normals.
pub fn sample_standard_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    Ok((0..d).map(|_| rng.sample(StandardNormal)).collect())
}

/// Standard normal pair with correlation `rho`: `Y = rho X + sqrt(1 - rho^2) Z`.
pub fn correlated_pair<R: Rng + ?Sized>(rho: f64, rng: &mut R) -> (f64, f64) {
    let x: f64 = rng.sample(StandardNormal);
    let z: f64 = rng.sample(StandardNormal);
    (x, rho * x + (1.0 - rho * rho).sqrt() * z)
}

/// Monte-Carlo estimate of `Pr[X >= tau, Y >= tau]` and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointTailEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
}

pub fn joint_tail_monte_carlo<R: Rng + ?Sized>(tau: f64, rho: f64, samples: u64, rng: &mut R) -> JointTailEstimate {
    let mut hits = 0u64;
    for _ in 0..samples {
        let (x, y) = correlated_pair(rho, rng);
        if x >= tau && y >= tau {
            hits += 1;
        }
    }
    let n = samples.max(1) as f64;
    let p = hits as f64 / n;
    JointTailEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / n).sqrt(),
        samples,
    }
}
