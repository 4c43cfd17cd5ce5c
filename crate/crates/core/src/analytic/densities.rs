use crate::error::{Error, Result};
use crate::numeric::{try_integrate_with, QuadConfig, Upper};
use crate::specfun::{
    bessel_i_scaled, hyper_1f2_minus_one, hyper_1f2_scaled, ln_factorial, Scaled, ScaledSum,
    SeriesControl, StopRule,
};

use super::ModelParams;

const INNER_TOL: f64 = 1e-13;
const OUTER_TOL: f64 = 1e-12;

fn check_positive(op: &'static str, name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(
            op,
            format!("{name} must be positive and finite, got {v}"),
        ))
    }
}

/// `h(y, t)` including the one-sided limits at `y = 0` and `t = 0`.
fn h_raw(y: f64, t: f64, p: &ModelParams, ctrl: &SeriesControl) -> Result<f64> {
    let (l, m) = (p.lambda, p.mu);
    if t == 0.0 {
        return Ok(0.0);
    }
    if y == 0.0 {
        return Ok(l * m * t * (-l * t).exp());
    }
    let i1 = bessel_i_scaled(1, 2.0 * (l * m * t * y).sqrt(), ctrl)?;
    Ok(i1
        .mul_exp(0.5 * (l * m * t / y).ln() - l * t - m * y)
        .value())
}

/// Density of the compound Poisson process `Y(t)` on `y > 0`:
/// `sqrt(lambda mu t / y) I_1(2 sqrt(lambda mu t y)) exp(-lambda t - mu y)`.
///
/// At `y = 0` the right limit `lambda mu t exp(-lambda t)` is returned.
pub fn h_density(y: f64, t: f64, p: &ModelParams, ctrl: &SeriesControl) -> Result<f64> {
    p.validate()?;
    check_positive("h_density", "t", t)?;
    if !(y >= 0.0 && y.is_finite()) {
        return Err(Error::domain(
            "h_density",
            format!("y must be >= 0, got {y}"),
        ));
    }
    h_raw(y, t, p, ctrl)
}

/// Subdensity of `Y(t)` on paths that have not yet reached the boundary,
/// started from the origin: `(t - y) / t * h(y, t)` for `0 < y < t`.
pub fn g0_subdensity(y: f64, t: f64, p: &ModelParams, ctrl: &SeriesControl) -> Result<f64> {
    p.validate()?;
    check_positive("g0_subdensity", "t", t)?;
    if !(y > 0.0 && y < t) {
        return Err(Error::domain(
            "g0_subdensity",
            format!("need 0 < y < t, got y = {y}, t = {t}"),
        ));
    }
    Ok((t - y) / t * h_raw(y, t, p, ctrl)?)
}

fn gx_raw(y: f64, t: f64, p: &ModelParams, ctrl: &SeriesControl) -> Result<f64> {
    let x = p.x;
    if y <= x {
        return h_raw(y, t, p, ctrl);
    }
    let lo = t + x - y;
    let inner = try_integrate_with(
        |u| Ok(h_raw(u - lo, u, p, ctrl)? * h_raw(t - u + x, t - u, p, ctrl)? / u),
        lo,
        Upper::Finite(t),
        &QuadConfig::new(INNER_TOL),
    )?;
    Ok(h_raw(y, t, p, ctrl)?
        - h_raw(y, y - x, p, ctrl)? * (-p.lambda * lo).exp()
        - lo * inner.value)
}

/// Subdensity `g_x(y, t)` of `Y(t)` on paths started from `x > 0` that have
/// not reached the boundary by time `t`, for `0 < y < x + t`.
pub fn gx_subdensity(y: f64, t: f64, p: &ModelParams, ctrl: &SeriesControl) -> Result<f64> {
    p.validate()?;
    check_positive("gx_subdensity", "t", t)?;
    check_positive("gx_subdensity", "x", p.x)?;
    if !(y > 0.0 && y < p.x + t) {
        return Err(Error::domain(
            "gx_subdensity",
            format!("need 0 < y < x + t, got y = {y}, x + t = {}", p.x + t),
        ));
    }
    gx_raw(y, t, p, ctrl)
}

fn psi0_scaled(t: f64, p: &ModelParams, ctrl: &SeriesControl) -> Result<Scaled> {
    let r = p.sqrt_lm();
    let i1 = bessel_i_scaled(1, 2.0 * t * r, ctrl)?;
    Ok(i1.mul_exp((p.lambda / (t * r)).ln() - (p.lambda + p.mu) * t))
}

/// Density of `T_0`:
/// `lambda / (t sqrt(lambda mu)) exp(-(lambda + mu) t) I_1(2 t sqrt(lambda mu))`.
///
/// At `t = 0` the right limit `lambda` is returned.
pub fn psi0(t: f64, p: &ModelParams, ctrl: &SeriesControl) -> Result<f64> {
    p.validate()?;
    if t == 0.0 {
        return Ok(p.lambda);
    }
    check_positive("psi0", "t", t)?;
    Ok(psi0_scaled(t, p, ctrl)?.value())
}

pub(crate) fn psi0_ln(t: f64, p: &ModelParams, ctrl: &SeriesControl) -> Result<f64> {
    Ok(psi0_scaled(t, p, ctrl)?.ln_abs())
}

/// The braces of the `psi_x` series, i.e. `psi_x(s)` divided by
/// `lambda exp(-(lambda + mu) s - mu x)`.
pub(crate) fn psix_braces(s: f64, x: f64, p: &ModelParams, ctrl: &SeriesControl) -> Result<Scaled> {
    let lm = p.lambda * p.mu;
    let z = lm * s * s;
    let lead = bessel_i_scaled(0, 2.0 * (lm * s * (s + x)).sqrt(), ctrl)?;

    // F_m = 1F2(-1/2; (m+1)/2, (m+2)/2; z) - 1 < 0, shared by every (r, j)
    // with j + r = m.
    let mut f_cache: Vec<Scaled> = Vec::new();
    let mut f_at = |m: usize| -> Result<Scaled> {
        while f_cache.len() <= m {
            let k = f_cache.len() as f64;
            f_cache.push(hyper_1f2_minus_one(
                -0.5,
                0.5 * (k + 1.0),
                0.5 * (k + 2.0),
                z,
                ctrl,
            )?);
        }
        Ok(f_cache[m])
    };

    let ln_ltx = (lm * s * x).ln();
    let ln_ratio = (s / x).ln();
    let mut outer = ScaledSum::new();
    let mut stop = StopRule::new(ctrl);
    let mut r = 0usize;
    loop {
        if r >= ctrl.max_terms {
            return Err(Error::Truncation {
                series: "psi_x series",
                terms: r,
                last_term: f64::NAN,
            });
        }
        let rf = r as f64;
        let w_r = rf * ln_ltx - ln_factorial(r as u32) - ln_factorial(r as u32 + 1);
        let mut inner = ScaledSum::new();
        let mut ln_binom = 0.0;
        for j in 0..=r {
            let jf = j as f64;
            let f = f_at(r + j)?;
            let ln_w = w_r + ln_binom + jf * ln_ratio + (jf + rf + 1.0).ln();
            inner.add(f.mul_exp(ln_w));
            ln_binom += ((rf - jf) / (jf + 1.0)).ln();
        }
        let term = inner.value();
        outer.add(term);
        let rel = (term.ln_abs() - outer.value().ln_abs()).exp();
        if stop.observe(rel, 1.0) {
            break;
        }
        r += 1;
    }
    let half = outer.value().mul_f64(0.5);
    Ok(lead.add(half))
}

/// Density of `T_x` for `x > 0` by the Bessel / `1F2` double series.
///
/// At `t = 0` the right limit `lambda exp(-mu x)` is returned.
pub fn psi_x_series(t: f64, p: &ModelParams, ctrl: &SeriesControl) -> Result<f64> {
    p.validate()?;
    check_positive("psi_x_series", "x", p.x)?;
    if t == 0.0 {
        return Ok(p.lambda * (-p.mu * p.x).exp());
    }
    check_positive("psi_x_series", "t", t)?;
    let braces = psix_braces(t, p.x, p, ctrl)?;
    Ok(braces
        .mul_exp(p.lambda.ln() - (p.lambda + p.mu) * t - p.mu * p.x)
        .value())
}

/// Density of `T_x`, `x >= 0`, from the renewal-type integral representation
/// in terms of `g_x`, evaluated by adaptive quadrature.
pub fn psi_x_integral(t: f64, p: &ModelParams, ctrl: &SeriesControl) -> Result<f64> {
    p.validate()?;
    check_positive("psi_x_integral", "t", t)?;
    let (l, m, x) = (p.lambda, p.mu, p.x);
    let cfg = QuadConfig::new(OUTER_TOL);
    let tail = |y: f64| (-m * (t + x - y)).exp();
    let mut total = l * (-l * t - m * (t + x)).exp();
    if x == 0.0 {
        let q = try_integrate_with(
            |y| Ok((t - y) / t * h_raw(y, t, p, ctrl)? * tail(y)),
            0.0,
            Upper::Finite(t),
            &cfg,
        )?;
        total += l * q.value;
    } else {
        let below = try_integrate_with(
            |y| Ok(h_raw(y, t, p, ctrl)? * tail(y)),
            0.0,
            Upper::Finite(x),
            &cfg,
        )?;
        let above = try_integrate_with(
            |y| Ok(gx_raw(y, t, p, ctrl)? * tail(y)),
            x,
            Upper::Finite(x + t),
            &cfg,
        )?;
        total += l * (below.value + above.value);
    }
    Ok(total)
}

/// Density of the renewal cycle `C_0 = 2 T_0`: `psi0(y / 2) / 2`.
pub fn pdf_c0(y: f64, p: &ModelParams, ctrl: &SeriesControl) -> Result<f64> {
    p.validate()?;
    if y == 0.0 {
        return Ok(0.5 * p.lambda);
    }
    check_positive("pdf_c0", "y", y)?;
    Ok(0.5 * psi0(0.5 * y, p, ctrl)?)
}

/// The `C_0` density exactly as it is commonly printed, with a spurious
/// leading factor `lambda`. Kept only to demonstrate that it integrates to
/// `lambda` rather than one.
pub fn pdf_c0_as_printed(y: f64, p: &ModelParams, ctrl: &SeriesControl) -> Result<f64> {
    p.validate()?;
    check_positive("pdf_c0_as_printed", "y", y)?;
    let r = p.sqrt_lm();
    let i1 = bessel_i_scaled(1, y * r, ctrl)?;
    Ok(i1
        .mul_exp(
            0.5 * (p.lambda / p.mu).ln() + p.lambda.ln() - y.ln() - 0.5 * (p.lambda + p.mu) * y,
        )
        .value())
}

/// Density of the first passage time `C_x = x + 2 T_x`.
///
/// Zero for `y < x`; the right limit `lambda exp(-mu x) / 2` at `y = x`.
/// With `x = 0` this is [`pdf_c0`].
pub fn pdf_cx(y: f64, p: &ModelParams, ctrl: &SeriesControl) -> Result<f64> {
    p.validate()?;
    if !y.is_finite() {
        return Err(Error::domain(
            "pdf_cx",
            format!("y must be finite, got {y}"),
        ));
    }
    if p.x == 0.0 {
        if y < 0.0 {
            return Ok(0.0);
        }
        return pdf_c0(y, p, ctrl);
    }
    if y < p.x {
        return Ok(0.0);
    }
    Ok(0.5 * psi_x_series(0.5 * (y - p.x), p, ctrl)?)
}

/// Density of the absorption time `A_0`.
///
/// At `y = 0` the right limit `alpha lambda / 2` is returned; `alpha = 1`
/// reduces to [`pdf_c0`].
pub fn pdf_a0(y: f64, p: &ModelParams, ctrl: &SeriesControl) -> Result<f64> {
    p.validate()?;
    if p.alpha == 1.0 {
        return pdf_c0(y, p, ctrl);
    }
    if y == 0.0 {
        return Ok(0.5 * p.alpha * p.lambda);
    }
    check_positive("pdf_a0", "y", y)?;
    let (l, mu, a) = (p.lambda, p.mu, p.alpha);
    let z = 0.25 * l * mu * y * y;
    let first = bessel_i_scaled(1, y * p.sqrt_lm(), ctrl)?.mul_exp(0.5 * (l / mu).ln());
    let mut sum = ScaledSum::new();
    sum.add(first);
    let ln_ly = (0.5 * l * y).ln();
    let ln_q = (1.0 - a).ln();
    let mut stop = StopRule::new(ctrl);
    let mut m = 2usize;
    loop {
        if m >= ctrl.max_terms {
            return Err(Error::Truncation {
                series: "pdf_a0 series",
                terms: m,
                last_term: f64::NAN,
            });
        }
        let mf = m as f64;
        let a1 = 0.5 * (mf - 1.0);
        let b1 = 0.5 * (mf + 1.0);
        let f_m = hyper_1f2_scaled(a1, b1, mf, z, ctrl)?;
        let f_m1 = hyper_1f2_scaled(a1, b1, mf + 1.0, z, ctrl)?;
        let bracket = f_m.mul_f64(2.0 * mf).add(f_m1.mul_f64(-(mf + 1.0)));
        let ln_w = mf * ln_ly + (mf - 1.0) * ln_q - (mf - 1.0).ln() - ln_factorial(m as u32 - 1);
        let term = bracket.mul_exp(ln_w);
        sum.add(term);
        let rel = (term.ln_abs() - sum.value().ln_abs()).exp();
        if stop.observe(rel, 1.0) {
            break;
        }
        m += 1;
    }
    Ok(sum
        .value()
        .mul_exp(a.ln() - 0.5 * (l + mu) * y - y.ln())
        .value())
}
