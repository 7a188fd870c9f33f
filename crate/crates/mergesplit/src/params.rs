//! Scaling exponents tied to one value of the size-distribution tail index.
//!
//! Everything downstream hangs off three numbers: the tail index `alpha` of
//! the initial data, the dilation rate `beta` of the self-similar frame, and
//! the decay exponent `alpha_hat` of the profile's approach to 1. They are
//! linked algebraically: `beta = (1-alpha)/(alpha(1+alpha))`, and `alpha_hat`
//! is the root in (0, 1/3] of `beta*x^2 - (beta+3)*x + 1 = 0`. Both exponents
//! are eigenvalue conditions for the profile flow, checked by
//! [`eigen_residuals`].

use crate::{Error, Result};
use serde::Serialize;

/// Exponent bundle for one self-similar profile.
///
/// `c_hat` is the tail amplitude `1 - u(z) ~ c_hat * z^{-alpha_hat}`. It has
/// no closed form and stays `None` until a fitted value is attached.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfileParams {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_hat: f64,
    pub c_hat: Option<f64>,
    pub lambda: f64,
}

impl ProfileParams {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        let beta = beta_of_alpha(alpha)?;
        let alpha_hat = alphahat_of_beta(beta)?;
        Ok(Self {
            alpha,
            beta,
            alpha_hat,
            c_hat: None,
            lambda,
        })
    }

    pub fn with_c_hat(mut self, c_hat: f64) -> Self {
        self.c_hat = Some(c_hat);
        self
    }
}

/// Dilation rate of the self-similar frame: `(1-alpha)/(alpha(1+alpha))`.
///
/// Accepts `alpha` in (0, 1]; the endpoint gives `beta = 0`, the equilibrium
/// case the series module needs.
pub fn beta_of_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    Ok((1.0 - alpha) / (alpha * (1.0 + alpha)))
}

/// Tail decay exponent: the root in (0, 1/3] of `beta*x^2 - (beta+3)*x + 1`.
///
/// Bisection to an interval of width 1e-14 followed by one Newton step. The
/// quadratic's other root is `1/(beta*alpha_hat) > 1` and is never returned.
pub fn alphahat_of_beta(beta: f64) -> Result<f64> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!(
            "beta must be finite and nonnegative, got {beta}"
        )));
    }
    if beta == 0.0 {
        return Ok(1.0 / 3.0);
    }
    let f = |x: f64| beta * x * x - (beta + 3.0) * x + 1.0;
    // f(0) = 1 > 0 and f(1/3) = -2*beta/9 < 0 for beta > 0.
    let (mut lo, mut hi) = (0.0_f64, 1.0 / 3.0);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    let slope = 2.0 * beta * x - (beta + 3.0);
    Ok(x - f(x) / slope)
}

/// Inverse of [`alphahat_of_beta`]: `beta = (1 - 3*alpha_hat) / (alpha_hat*(1 - alpha_hat))`.
pub fn beta_of_alphahat(alpha_hat: f64) -> Result<f64> {
    if !(alpha_hat > 0.0 && alpha_hat <= 1.0 / 3.0) {
        return Err(Error::Domain(format!(
            "alpha_hat must lie in (0, 1/3], got {alpha_hat}"
        )));
    }
    Ok((1.0 - 3.0 * alpha_hat) / (alpha_hat * (1.0 - alpha_hat)))
}

/// Residuals of the two eigenvalue determinants that pin the exponents:
/// `det[-1-beta*alpha, 2; 1, -1-alpha]` and `det[-3+beta*alpha_hat, 2; 1, -1+alpha_hat]`.
///
/// Both vanish (to rounding) for consistent parameters; the first equals
/// `(1+beta*alpha)(1+alpha) - 2`, so a perturbation `beta + d` shifts it by
/// `+d*alpha*(1+alpha)`.
pub fn eigen_residuals(p: &ProfileParams) -> (f64, f64) {
    let r1 = (-1.0 - p.beta * p.alpha) * (-1.0 - p.alpha) - 2.0;
    let r2 = (-3.0 + p.beta * p.alpha_hat) * (-1.0 + p.alpha_hat) - 2.0;
    (r1, r2)
}
