//! Closed-form distribution theory.
//!
//! Notation: `C_x` is the first passage time to the origin from `x >= 0`,
//! `C_0` a renewal cycle started at the origin, `M` the geometric number of
//! visits to the origin up to absorption and `A_x = C_x + C_{0,1} + ... +
//! C_{0,M-1}` the absorption time. `psi_x` is the density of the time `T_x`
//! the particle spends moving upward before `C_x`, so that `C_x = 2 T_x + x`.

mod cycle;
mod densities;
mod transforms;

pub use cycle::{
    cond_atom, cond_cdf_within_cycle, cond_pdf_within_cycle, cycle_point, joint_subdist,
    joint_subdist_constructive, CyclePoint,
};
pub use densities::{
    g0_subdensity, gx_subdensity, h_density, pdf_a0, pdf_c0, pdf_c0_as_printed, pdf_cx, psi0,
    psi_x_integral, psi_x_series,
};
pub use transforms::{
    closed_mean_var, mgf_a0, mgf_ax, mgf_c0, mgf_cx, mgf_tx, moment_a0, moment_ax, moment_c0,
    moment_cx, variances_as_printed, MeanVar,
};

use crate::error::{Error, Result};

/// Model parameters `(lambda, mu, alpha, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Rate of the upward phases.
    pub lambda: f64,
    /// Rate of the downward phases.
    pub mu: f64,
    /// Absorption probability on each visit to the origin.
    pub alpha: f64,
    /// Starting position.
    pub x: f64,
}

impl ModelParams {
    /// Validates `0 < mu < lambda`, `0 < alpha <= 1` and `x >= 0`.
    pub fn new(lambda: f64, mu: f64, alpha: f64, x: f64) -> Result<Self> {
        let p = ModelParams {
            lambda,
            mu,
            alpha,
            x,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ModelParams {
            lambda,
            mu,
            alpha,
            x,
        } = *self;
        if ![lambda, mu, alpha, x].iter().all(|v| v.is_finite()) {
            return Err(Error::domain("ModelParams", "parameters must be finite"));
        }
        if !(mu > 0.0 && mu < lambda) {
            return Err(Error::domain(
                "ModelParams",
                format!("need 0 < mu < lambda, got lambda = {lambda}, mu = {mu}"),
            ));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::domain(
                "ModelParams",
                format!("need 0 < alpha <= 1, got {alpha}"),
            ));
        }
        if x < 0.0 {
            return Err(Error::domain(
                "ModelParams",
                format!("need x >= 0, got {x}"),
            ));
        }
        Ok(())
    }

    pub fn with_x(mut self, x: f64) -> Self {
        self.x = x;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub(crate) fn sqrt_lm(&self) -> f64 {
        (self.lambda * self.mu).sqrt()
    }

    pub fn domain(&self) -> MgfDomain {
        MgfDomain::of(self)
    }
}

/// Upper ends of the regions of convergence of the moment generating
/// functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgfDomain {
    /// `(sqrt(lambda) - sqrt(mu))^2 / 2`, for `C_0` and `C_x`.
    pub bound_c: f64,
    /// `(sqrt(lambda) - sqrt(mu))^2`, for `T_x`.
    pub bound_t: f64,
    /// Bound for `A_0` and `A_x`: the smaller of `bound_c` and the pole of
    /// `1 / (1 - (1 - alpha) M_{C_0}(s))`.
    pub bound_a: f64,
}

impl MgfDomain {
    pub fn of(p: &ModelParams) -> Self {
        let d = p.lambda.sqrt() - p.mu.sqrt();
        let bound_c = 0.5 * d * d;
        let bound_a = if p.alpha < 1.0 {
            // (1 - alpha) M_{C_0}(s) = 1 at s = alpha (lambda - mu / (1 - alpha)) / 2,
            // a root only when it lies below bound_c.
            let pole = 0.5 * p.alpha * (p.lambda - p.mu / (1.0 - p.alpha));
            if (1.0 - p.alpha).powi(2) > p.mu / p.lambda {
                pole.min(bound_c)
            } else {
                bound_c
            }
        } else {
            bound_c
        };
        MgfDomain {
            bound_c,
            bound_t: d * d,
            bound_a,
        }
    }
}

/// `P[M = m] = alpha (1 - alpha)^(m - 1)` for `m >= 1`.
pub fn geometric_pmf(m: u64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain(
            "geometric_pmf",
            format!("need 0 < alpha <= 1, got {alpha}"),
        ));
    }
    if m == 0 {
        return Err(Error::domain("geometric_pmf", "m must be at least 1"));
    }
    if alpha == 1.0 {
        return Ok(if m == 1 { 1.0 } else { 0.0 });
    }
    Ok(alpha * ((m - 1) as f64 * (1.0 - alpha).ln()).exp())
}
