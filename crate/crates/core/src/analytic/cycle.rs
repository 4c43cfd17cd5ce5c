use crate::error::{Error, Result};
use crate::numeric::{cdf_derivative, try_integrate_with, QuadConfig, Upper};
use crate::specfun::{
    hyper_0f1_scaled, hyper_1f2_minus_one, hyper_1f2_scaled, ln_factorial, Scaled, ScaledSum,
    SeriesControl, StopRule,
};

use super::densities::{g0_subdensity, psi0_ln, psi_x_series, psix_braces};
use super::ModelParams;

fn check_times(op: &'static str, t: f64, tau: f64) -> Result<()> {
    if t > 0.0 && tau > t && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(
            op,
            format!("need 0 < t < tau, got t = {t}, tau = {tau}"),
        ))
    }
}

fn ln_binom(n: usize, k: usize) -> f64 {
    ln_factorial(n as u32) - ln_factorial(k as u32) - ln_factorial((n - k) as u32)
}

/// `ln` of `b^e`, with `0^0 = 1`.
fn ln_pow(b: f64, e: usize) -> f64 {
    if e == 0 {
        0.0
    } else {
        e as f64 * b.ln()
    }
}

/// `P[Y(t) <= y, T_0 in d tau] / d tau` divided by `lambda exp(-(lambda + mu) tau)`.
fn joint_braces(y: f64, tau: f64, t: f64, p: &ModelParams, ctrl: &SeriesControl) -> Result<Scaled> {
    let lm = p.lambda * p.mu;
    let d = tau - t;
    // Paths with no reversal before t.
    let mut total = ScaledSum::new();
    total.add(psix_braces(d, t, p, ctrl)?);
    if y == 0.0 {
        return Ok(total.value());
    }
    let zty = lm * t * y;

    // Single sum over j.
    let mut part2 = ScaledSum::new();
    let mut stop = StopRule::new(ctrl);
    let mut j = 0usize;
    loop {
        if j >= ctrl.max_terms {
            return Err(Error::Truncation {
                series: "joint subdistribution j-series",
                terms: j,
                last_term: f64::NAN,
            });
        }
        let jf = j as f64;
        let bessel = hyper_0f1_scaled(jf + 1.0, lm * d * (tau - y), ctrl)?;
        let g = hyper_1f2_scaled(1.0, jf + 2.0, 2.0, zty, ctrl)?
            .mul_exp(t.ln() - ln_factorial(j as u32 + 1));
        let hh = hyper_1f2_scaled(2.0, jf + 3.0, 2.0, zty, ctrl)?
            .mul_exp(y.ln() - ln_factorial(j as u32 + 2));
        let bracket = g.add(hh.mul_f64(-1.0));
        let term = bessel
            .mul(bracket)
            .mul_exp((lm * y).ln() + jf * (lm * y * d).ln() - ln_factorial(j as u32));
        part2.add(term);
        let rel = (term.ln_abs() - part2.value().ln_abs()).exp();
        if term.is_zero() || stop.observe(rel, 1.0) {
            break;
        }
        j += 1;
    }
    total.add(part2.value());

    // Double sum over (r, s) with the finite k-sum.
    let z2 = lm * d * d;
    let mut f_cache: Vec<Scaled> = Vec::new();
    let mut g_cache: Vec<Scaled> = Vec::new();
    let mut s_cache: Vec<Scaled> = Vec::new();
    let mut part3 = ScaledSum::new();
    let mut stop = StopRule::new(ctrl);
    let mut r = 0usize;
    loop {
        if r >= ctrl.max_terms {
            return Err(Error::Truncation {
                series: "joint subdistribution r-series",
                terms: r,
                last_term: f64::NAN,
            });
        }
        while f_cache.len() <= 2 * r {
            let m = f_cache.len() as f64;
            f_cache.push(hyper_1f2_minus_one(
                -0.5,
                0.5 * (m + 1.0),
                0.5 * (m + 2.0),
                z2,
                ctrl,
            )?);
        }
        while g_cache.len() <= r + 2 {
            let k = g_cache.len() as f64;
            g_cache.push(hyper_1f2_scaled(1.0, k + 2.0, 2.0, zty, ctrl)?);
        }
        while s_cache.len() <= r {
            let s = s_cache.len();
            let mut acc = ScaledSum::new();
            for k in 0..=s + 1 {
                if t - y == 0.0 && k < s + 1 {
                    continue;
                }
                let ln = ln_binom(s + 1, k) + ln_pow(t - y, s + 1 - k) + (k as f64 + 1.0) * y.ln()
                    - (k as f64 + 1.0).ln();
                acc.add(g_cache[k].mul_exp(ln));
            }
            s_cache.push(acc.value());
        }
        let rf = r as f64;
        let w_r = (0.5 * lm).ln() + rf * (lm * d).ln()
            - ln_factorial(r as u32)
            - ln_factorial(r as u32 + 1);
        let mut inner = ScaledSum::new();
        for s in 0..=r {
            let ln = w_r + ln_binom(r, r - s) + (2.0 * rf + 1.0 - s as f64).ln() + ln_pow(d, r - s);
            inner.add(f_cache[2 * r - s].mul(s_cache[s]).mul_exp(ln));
        }
        let term = inner.value();
        part3.add(term);
        let rel = (term.ln_abs() - part3.value().ln_abs()).exp();
        if term.is_zero() || stop.observe(rel, 1.0) {
            break;
        }
        r += 1;
    }
    total.add(part3.value());
    Ok(total.value())
}

fn joint_scaled(y: f64, tau: f64, t: f64, p: &ModelParams, ctrl: &SeriesControl) -> Result<Scaled> {
    Ok(joint_braces(y, tau, t, p, ctrl)?.mul_exp(p.lambda.ln() - (p.lambda + p.mu) * tau))
}

/// Joint subdistribution `F_{Y(t), T_0}(y, tau) = P[Y(t) <= y, T_0 in d tau] / d tau`
/// for `0 <= y <= t < tau`, by its closed triple series.
///
/// At `y = 0` only the paths without reversal before `t` contribute; at
/// `y = t` the value is `psi0(tau)`.
pub fn joint_subdist(
    y: f64,
    tau: f64,
    t: f64,
    p: &ModelParams,
    ctrl: &SeriesControl,
) -> Result<f64> {
    p.validate()?;
    check_times("joint_subdist", t, tau)?;
    if !(0.0..=t).contains(&y) {
        return Err(Error::domain(
            "joint_subdist",
            format!("need 0 <= y <= t, got y = {y}"),
        ));
    }
    Ok(joint_scaled(y, tau, t, p, ctrl)?.value())
}

/// The same subdistribution from its construction,
/// `exp(-lambda t) psi_t(tau - t) + int_0^y g_0(u, t) psi_{t-u}(tau - t) du`,
/// evaluated by quadrature.
pub fn joint_subdist_constructive(
    y: f64,
    tau: f64,
    t: f64,
    p: &ModelParams,
    ctrl: &SeriesControl,
) -> Result<f64> {
    p.validate()?;
    check_times("joint_subdist_constructive", t, tau)?;
    if !(0.0..t).contains(&y) {
        return Err(Error::domain(
            "joint_subdist_constructive",
            format!("need 0 <= y < t, got y = {y}"),
        ));
    }
    let d = tau - t;
    let atom = (-p.lambda * t).exp() * psi_x_series(d, &p.with_x(t), ctrl)?;
    if y == 0.0 {
        return Ok(atom);
    }
    let q = try_integrate_with(
        |u| Ok(g0_subdensity(u, t, p, ctrl)? * psi_x_series(d, &p.with_x(t - u), ctrl)?),
        0.0,
        Upper::Finite(y),
        &QuadConfig::new(1e-12),
    )?;
    Ok(atom + q.value)
}

/// `P[W(t) > w | T_0 = tau]` for `t / 2 <= w <= t`.
fn survival_w(
    w: f64,
    t: f64,
    tau: f64,
    ln_psi0: f64,
    p: &ModelParams,
    ctrl: &SeriesControl,
) -> Result<f64> {
    let y = (t - w).max(0.0).min(w);
    Ok(joint_scaled(y, tau, w, p, ctrl)?.mul_exp(-ln_psi0).value())
}

/// Probability that no reversal occurred before `t`, so that `X(t) = t`,
/// given `T_0 = tau`: `exp(-lambda t) psi_t(tau - t) / psi0(tau)`.
pub fn cond_atom(t: f64, tau: f64, p: &ModelParams, ctrl: &SeriesControl) -> Result<f64> {
    p.validate()?;
    check_times("cond_atom", t, tau)?;
    let ln_psi0 = psi0_ln(tau, p, ctrl)?;
    Ok(joint_scaled(0.0, tau, t, p, ctrl)?
        .mul_exp(-ln_psi0)
        .value())
}

/// Continuous part of the conditional CDF of `X(t)` within a renewal cycle
/// started at the origin, given `T_0 = tau`:
/// `P[W(t) > t/2 | tau] - P[W(t) > (t + xval)/2 | tau]` for `0 <= xval <= t`.
///
/// Only `lambda` and `mu` are used from `p`. The atom at `xval = t` is not
/// included; see [`cond_atom`].
pub fn cond_cdf_within_cycle(
    xval: f64,
    t: f64,
    tau: f64,
    p: &ModelParams,
    ctrl: &SeriesControl,
) -> Result<f64> {
    p.validate()?;
    check_times("cond_cdf_within_cycle", t, tau)?;
    if !(0.0..=t).contains(&xval) {
        return Err(Error::domain(
            "cond_cdf_within_cycle",
            format!("need 0 <= x <= t, got x = {xval}, t = {t}"),
        ));
    }
    if xval == 0.0 {
        return Ok(0.0);
    }
    let ln_psi0 = psi0_ln(tau, p, ctrl)?;
    let top = survival_w(0.5 * t, t, tau, ln_psi0, p, ctrl)?;
    let w = if xval == t { t } else { 0.5 * (t + xval) };
    Ok(top - survival_w(w, t, tau, ln_psi0, p, ctrl)?)
}

/// Density of the continuous part of the conditional law of `X(t)`, by
/// numerical differentiation of [`cond_cdf_within_cycle`].
pub fn cond_pdf_within_cycle(
    xval: f64,
    t: f64,
    tau: f64,
    p: &ModelParams,
    ctrl: &SeriesControl,
) -> Result<f64> {
    p.validate()?;
    check_times("cond_pdf_within_cycle", t, tau)?;
    if !(0.0..=t).contains(&xval) {
        return Err(Error::domain(
            "cond_pdf_within_cycle",
            format!("need 0 <= x <= t, got x = {xval}, t = {t}"),
        ));
    }
    cdf_derivative(
        |x| cond_cdf_within_cycle(x.clamp(0.0, t), t, tau, p, ctrl),
        xval,
        1e-3 * t,
        0.0,
        t,
    )
}

/// Conditional law of `X(t)` within a renewal cycle given `T_0 = tau`,
/// tabulated on a grid of `[0, t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclePoint {
    pub t: f64,
    pub tau: f64,
    /// Mass of the atom at `X(t) = t`.
    pub atom_prob: f64,
    /// Mass of the continuous part on `[0, t]`.
    pub continuous_mass: f64,
    pub xs: Vec<f64>,
    pub cdf: Vec<f64>,
    pub pdf: Vec<f64>,
}

impl CyclePoint {
    /// `atom_prob + continuous_mass - 1`.
    pub fn normalization_defect(&self) -> f64 {
        self.atom_prob + self.continuous_mass - 1.0
    }
}

pub fn cycle_point(
    t: f64,
    tau: f64,
    xs: &[f64],
    p: &ModelParams,
    ctrl: &SeriesControl,
) -> Result<CyclePoint> {
    let atom_prob = cond_atom(t, tau, p, ctrl)?;
    let continuous_mass = cond_cdf_within_cycle(t, t, tau, p, ctrl)?;
    let cdf = xs
        .iter()
        .map(|&x| cond_cdf_within_cycle(x, t, tau, p, ctrl))
        .collect::<Result<Vec<_>>>()?;
    let pdf = xs
        .iter()
        .map(|&x| cond_pdf_within_cycle(x, t, tau, p, ctrl))
        .collect::<Result<Vec<_>>>()?;
    Ok(CyclePoint {
        t,
        tau,
        atom_prob,
        continuous_mass,
        xs: xs.to_vec(),
        cdf,
        pdf,
    })
}
