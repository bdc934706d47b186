//! The Carleman weight in the conformal variable `t = ln |y|`.
//!
//! The unscaled weight is
//!
//! ```text
//! phi(t) = -t + (t * atan(t) - ln(1 + t^2) / 2) / 10
//! ```
//!
//! so that `phi' = -1 + atan(t) / 10` and `phi'' = 1 / (10 (1 + t^2)) > 0`.
//! The conjugated weight is `tau * phi`; [`CarlemanWeight`] carries `tau`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Half-width of the range of `phi'` around `-1`.
pub const SLOPE_SPREAD: f64 = PI / 20.0;

pub fn phi(t: f64) -> f64 {
    -t + 0.1 * (t * t.atan() - 0.5 * t.mul_add(t, 1.0).ln())
}

pub fn phi_prime(t: f64) -> f64 {
    -1.0 + 0.1 * t.atan()
}

pub fn phi_double_prime(t: f64) -> f64 {
    0.1 / t.mul_add(t, 1.0)
}

pub fn phi_third(t: f64) -> f64 {
    let q = t.mul_add(t, 1.0);
    -0.2 * t / (q * q)
}

/// Fourth derivative, `(6t^2 - 2) / (10 (1 + t^2)^3)`.
pub fn phi_fourth(t: f64) -> f64 {
    let q = t.mul_add(t, 1.0);
    0.1 * (6.0 * t * t - 2.0) / (q * q * q)
}

/// Conjugation weight `tau * phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarlemanWeight {
    tau: f64,
}

impl CarlemanWeight {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(invalid(format!("tau must be positive and finite, got {tau}")));
        }
        Ok(Self { tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn value(&self, t: f64) -> f64 {
        self.tau * phi(t)
    }

    pub fn first(&self, t: f64) -> f64 {
        self.tau * phi_prime(t)
    }

    pub fn second(&self, t: f64) -> f64 {
        self.tau * phi_double_prime(t)
    }

    pub fn fourth(&self, t: f64) -> f64 {
        self.tau * phi_fourth(t)
    }

    /// `e^{tau phi(ln r)}` evaluated at a Cartesian radius.
    pub fn exp_at_radius(&self, r: f64) -> f64 {
        self.value(r.ln()).exp()
    }

    pub fn turning_point(&self, mu: f64) -> Result<f64> {
        turning_point(mu, self.tau)
    }
}

/// Solution `T` of `tau * phi'(T) = -mu`.
///
/// Returns `-inf` when `-mu` lies below the range of `tau * phi'` and `+inf`
/// when it lies above. Inside the range the root is bracketed by doubling and
/// refined by bisection to an absolute tolerance of `1e-10`.
pub fn turning_point(mu: f64, tau: f64) -> Result<f64> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(invalid(format!("mu must be positive and finite, got {mu}")));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(invalid(format!("tau must be positive and finite, got {tau}")));
    }
    let target = -mu / tau;
    if target <= -1.0 - SLOPE_SPREAD {
        return Ok(f64::NEG_INFINITY);
    }
    if target >= -1.0 + SLOPE_SPREAD {
        return Ok(f64::INFINITY);
    }
    let g = |t: f64| phi_prime(t) - target;

    let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
    while g(lo) > 0.0 {
        lo *= 2.0;
        if !lo.is_finite() {
            return Ok(f64::NEG_INFINITY);
        }
    }
    while g(hi) < 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Ok(f64::INFINITY);
        }
    }
    for _ in 0..2000 {
        if hi - lo <= 1e-10 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
