use crate::error::{Error, Result};
use crate::specfun::{gen_binom, hyper_2f1, DoubleDouble, SeriesControl, StopRule};

use super::{MgfDomain, ModelParams};

/// Relative size of the surviving sum below which the closed form for the
/// `A_0` moments is considered cancelled out.
const CANCELLATION_LIMIT: f64 = 1e-6;

fn check_s(op: &'static str, s: f64, bound: f64) -> Result<()> {
    if s.is_finite() && s < bound {
        Ok(())
    } else {
        Err(Error::domain(op, format!("s = {s} must be below {bound}")))
    }
}

fn check_n(op: &'static str, n: u32) -> Result<()> {
    if n >= 1 {
        Ok(())
    } else {
        Err(Error::domain(op, "moment order must be at least 1"))
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `sqrt((lambda + mu - u)^2 - 4 lambda mu)`.
fn root(p: &ModelParams, u: f64) -> f64 {
    let b = p.lambda + p.mu - u;
    (b * b - 4.0 * p.lambda * p.mu).max(0.0).sqrt()
}

/// `E[exp(u T_0)]` in the cancellation-free form `2 lambda / (b + sqrt(b^2 - 4 lambda mu))`.
fn mgf_t0_raw(p: &ModelParams, u: f64) -> f64 {
    2.0 * p.lambda / (p.lambda + p.mu - u + root(p, u))
}

/// `E(s, x) = exp{(x / 2) [lambda - mu - sqrt((lambda + mu - 2s)^2 - 4 lambda mu)]}`.
fn exp_factor(p: &ModelParams, s: f64) -> f64 {
    (0.5 * p.x * (p.lambda - p.mu - root(p, 2.0 * s))).exp()
}

/// MGF of the renewal cycle `C_0`, for `s < (sqrt(lambda) - sqrt(mu))^2 / 2`.
pub fn mgf_c0(s: f64, p: &ModelParams) -> Result<f64> {
    p.validate()?;
    check_s("mgf_c0", s, MgfDomain::of(p).bound_c)?;
    Ok(mgf_t0_raw(p, 2.0 * s))
}

/// MGF of the absorption time `A_0`, for `s` below [`MgfDomain::bound_a`].
pub fn mgf_a0(s: f64, p: &ModelParams) -> Result<f64> {
    p.validate()?;
    if p.alpha == 1.0 {
        return mgf_c0(s, p);
    }
    check_s("mgf_a0", s, MgfDomain::of(p).bound_a)?;
    let (l, m, a) = (p.lambda, p.mu, p.alpha);
    Ok(2.0 * a * l / (2.0 * l * (a - 1.0) + l + m - 2.0 * s + root(p, 2.0 * s)))
}

/// MGF of `T_x`, for `s < (sqrt(lambda) - sqrt(mu))^2`.
pub fn mgf_tx(s: f64, p: &ModelParams) -> Result<f64> {
    p.validate()?;
    check_s("mgf_tx", s, MgfDomain::of(p).bound_t)?;
    let e = (0.5 * p.x * (p.lambda - p.mu - s - root(p, s))).exp();
    Ok(mgf_t0_raw(p, s) * e)
}

/// MGF of the first passage time `C_x`.
pub fn mgf_cx(s: f64, p: &ModelParams) -> Result<f64> {
    Ok(mgf_c0(s, p)? * exp_factor(p, s))
}

/// MGF of the absorption time `A_x`.
pub fn mgf_ax(s: f64, p: &ModelParams) -> Result<f64> {
    Ok(mgf_a0(s, p)? * exp_factor(p, s))
}

fn z_ratio(p: &ModelParams) -> f64 {
    4.0 * p.lambda * p.mu / (p.lambda + p.mu).powi(2)
}

/// `2F1((k + 1) / 2, (k + 2) / 2; 2; 4 lambda mu / (lambda + mu)^2)`.
///
/// When the series converges too slowly for `ctrl` (`lambda` close to `mu`)
/// the value is recovered from the Taylor coefficients of the MGF of `T_0`,
/// which satisfies `mu M^2 - (lambda + mu - u) M + lambda = 0`.
fn f_k(k: u32, p: &ModelParams, ctrl: &SeriesControl) -> Result<f64> {
    let kf = k as f64;
    match hyper_2f1(0.5 * (kf + 1.0), 0.5 * (kf + 2.0), 2.0, z_ratio(p), ctrl) {
        Err(Error::Truncation { terms, .. }) => {
            log::debug!("2F1 for the C_0 moments truncated after {terms} terms at k = {k}; using the MGF recursion");
            let t = t0_taylor_recursive(k, p)[k as usize];
            Ok(t * (p.lambda + p.mu).powi(k as i32 + 1) / p.lambda)
        }
        r => r,
    }
}

/// `E[C_0^k] / k!`, with the value one at `k = 0`.
fn c0_taylor(k: u32, p: &ModelParams, ctrl: &SeriesControl) -> Result<f64> {
    let lm = p.lambda + p.mu;
    Ok(p.lambda * 2f64.powi(k as i32) / lm.powi(k as i32 + 1) * f_k(k, p, ctrl)?)
}

/// `E[T_0^j] / j!` for `j <= k`.
fn t0_taylor_recursive(k: u32, p: &ModelParams) -> Vec<f64> {
    let mut t = vec![1.0];
    for n in 1..=k as usize {
        let conv: f64 = (1..n).map(|i| t[i] * t[n - i]).sum();
        t.push((t[n - 1] + p.mu * conv) / (p.lambda - p.mu));
    }
    t
}

/// `n`-th moment of the renewal cycle `C_0`.
pub fn moment_c0(n: u32, p: &ModelParams, ctrl: &SeriesControl) -> Result<f64> {
    p.validate()?;
    check_n("moment_c0", n)?;
    Ok(factorial(n) * c0_taylor(n, p, ctrl)?)
}

/// `E[A_0^k] / k!` from `M_{A_0} (1 - (1 - alpha) M_{C_0}) = alpha M_{C_0}`.
fn a0_taylor_recursive(n: u32, p: &ModelParams, ctrl: &SeriesControl) -> Result<Vec<f64>> {
    let c: Vec<f64> = (0..=n)
        .map(|k| c0_taylor(k, p, ctrl))
        .collect::<Result<_>>()?;
    let w = (1.0 - p.alpha) / p.alpha;
    let mut a = vec![1.0];
    for k in 1..=n as usize {
        let conv: f64 = (0..k).map(|i| a[i] * c[k - i]).sum();
        a.push(c[k] + w * conv);
    }
    Ok(a)
}

/// `n`-th moment of the absorption time `A_0`.
///
/// Uses the finite closed form in `K = 4 lambda alpha (mu + lambda (alpha - 1))`
/// and `L = 8 lambda (alpha - 1)`; near `K = 0` that form cancels
/// catastrophically and the Taylor recursion of the MGF identity is used.
pub fn moment_a0(n: u32, p: &ModelParams, ctrl: &SeriesControl) -> Result<f64> {
    p.validate()?;
    check_n("moment_a0", n)?;
    if p.alpha == 1.0 {
        return moment_c0(n, p, ctrl);
    }
    let (l, m, a) = (p.lambda, p.mu, p.alpha);
    let k = 4.0 * l * a * (m + l * (a - 1.0));
    let big_l = 8.0 * l * (a - 1.0);
    let mut terms = vec![(2.0 * m + 2.0 * l * (a - 1.0)) * big_l.powi(n as i32)];
    for h in 1..=n {
        terms.push(
            k.powi(h as i32) * big_l.powi((n - h) as i32) * l * m * 2f64.powi(h as i32 + 1)
                / (l + m).powi(h as i32 + 1)
                * f_k(h, p, ctrl)?,
        );
    }
    let abs: f64 = terms.iter().map(|t| t.abs()).sum();
    let sum: f64 = terms.iter().sum();
    if k == 0.0 || sum.abs() < CANCELLATION_LIMIT * abs {
        log::debug!("moment_a0: closed form cancels (K = {k}); using the MGF recursion");
        return Ok(factorial(n) * a0_taylor_recursive(n, p, ctrl)?[n as usize]);
    }
    Ok(2.0 * a * l * factorial(n) * sum / k.powi(n as i32 + 1))
}

/// `binom(j/2, h) 2F1(-h, -j/2; j/2 + 1 - h; q)`.
///
/// For even `j` with `j/2 + 1 - h <= 0` the hypergeometric factor has a
/// vanishing denominator before the series terminates. The product is then
/// evaluated as the convolution `sum_k binom(j/2, k) binom(j/2, h - k) q^k`
/// it was obtained from.
pub(crate) fn binom_hyp(j: u32, h: u32, q: f64, ctrl: &SeriesControl) -> Result<f64> {
    let half = 0.5 * j as f64;
    match hyper_2f1(-(h as f64), -half, half + 1.0 - h as f64, q, ctrl) {
        Ok(f) => Ok(gen_binom(half, h) * f),
        Err(Error::Pole { .. }) => {
            log::debug!("binom_hyp: pole at j = {j}, h = {h}; using the binomial convolution");
            Ok(binom_convolution(j, h, q))
        }
        Err(e) => Err(e),
    }
}

pub(crate) fn binom_convolution(j: u32, h: u32, q: f64) -> f64 {
    let half = 0.5 * j as f64;
    (0..=h)
        .map(|k| gen_binom(half, k) * gen_binom(half, h - k) * q.powi(k as i32))
        .sum()
}

/// `exp(x (lambda - mu) / 2) J_h` for `h = 0..=n`, where
/// `J_h = sum_j [-(lambda - mu) x / 2]^j / j! binom(j/2, h) 2F1(...)`.
fn scaled_j_sums(n: u32, p: &ModelParams, ctrl: &SeriesControl) -> Result<Vec<f64>> {
    let c = 0.5 * (p.lambda - p.mu) * p.x;
    let (sl, sm) = (p.lambda.sqrt(), p.mu.sqrt());
    let q = ((sl - sm) / (sl + sm)).powi(2);
    let mut out = Vec::with_capacity(n as usize + 1);
    for h in 0..=n {
        let mut acc = DoubleDouble::ZERO;
        let mut stop = StopRule::new(ctrl);
        let mut weight = 1.0;
        let mut j = 0u32;
        loop {
            if j as usize >= ctrl.max_terms {
                return Err(Error::Truncation {
                    series: "moment j-series",
                    terms: j as usize,
                    last_term: weight,
                });
            }
            let term = weight * binom_hyp(j, h, q, ctrl)?;
            acc.add(term);
            if stop.observe(term.abs(), acc.value().abs()) && j >= 2 * h + 2 {
                break;
            }
            j += 1;
            weight *= -c / j as f64;
        }
        out.push(c.exp() * acc.value());
    }
    Ok(out)
}

/// `n`-th moment of the first passage time `C_x`.
pub fn moment_cx(n: u32, p: &ModelParams, ctrl: &SeriesControl) -> Result<f64> {
    p.validate()?;
    check_n("moment_cx", n)?;
    if p.x == 0.0 {
        return moment_c0(n, p, ctrl);
    }
    let (l, m) = (p.lambda, p.mu);
    let d2 = (l.sqrt() - m.sqrt()).powi(2);
    let j = scaled_j_sums(n, p, ctrl)?;
    let mut acc = DoubleDouble::ZERO;
    for h in 0..=n {
        acc.add((-(l + m) / d2).powi(h as i32) * f_k(n - h, p, ctrl)? * j[h as usize]);
    }
    Ok(factorial(n) * l / (l + m) * (2.0 / (l + m)).powi(n as i32) * acc.value())
}

/// `n`-th moment of the absorption time `A_x`.
pub fn moment_ax(n: u32, p: &ModelParams, ctrl: &SeriesControl) -> Result<f64> {
    p.validate()?;
    check_n("moment_ax", n)?;
    if p.alpha == 1.0 {
        return moment_cx(n, p, ctrl);
    }
    if p.x == 0.0 {
        return moment_a0(n, p, ctrl);
    }
    let (l, m, a) = (p.lambda, p.mu, p.alpha);
    let k = 4.0 * l * a * (m + l * (a - 1.0));
    let big_l = 8.0 * l * (a - 1.0);
    let rho = (a * m + a * l * (a - 1.0)) / ((a - 1.0) * (l + m));
    let d2 = (l.sqrt() - m.sqrt()).powi(2);
    let j = scaled_j_sums(n, p, ctrl)?;
    let mut fallback: Option<Vec<f64>> = None;
    let mut acc = DoubleDouble::ZERO;
    for h in 0..=n {
        let deg = n - h;
        let head = 2.0 * m + 2.0 * l * (a - 1.0);
        let mut bracket = head;
        let mut abs = head.abs();
        for mm in 1..=deg {
            let t = 2.0 * l * m / (l + m) * rho.powi(mm as i32) * f_k(mm, p, ctrl)?;
            bracket += t;
            abs += t.abs();
        }
        // 2 alpha lambda L^deg / K^(deg + 1) [...] is E[A_0^deg] / deg!.
        let a_coeff = if k == 0.0 || (deg > 0 && bracket.abs() < CANCELLATION_LIMIT * abs) {
            if fallback.is_none() {
                log::debug!("moment_ax: closed form cancels (K = {k}); using the MGF recursion");
                fallback = Some(a0_taylor_recursive(n, p, ctrl)?);
            }
            fallback.as_ref().expect("just computed")[deg as usize]
        } else {
            2.0 * a * l * big_l.powi(deg as i32) / k.powi(deg as i32 + 1) * bracket
        };
        acc.add((-2.0 / d2).powi(h as i32) * a_coeff * j[h as usize]);
    }
    Ok(factorial(n) * acc.value())
}

/// Means and variances of `C_x` and `A_x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanVar {
    pub mean_cx: f64,
    pub var_cx: f64,
    pub mean_ax: f64,
    pub var_ax: f64,
}

/// Closed-form means and variances of `C_x` and `A_x`.
pub fn closed_mean_var(p: &ModelParams) -> Result<MeanVar> {
    p.validate()?;
    let (l, m, a, x) = (p.lambda, p.mu, p.alpha, p.x);
    let d = l - m;
    let d3 = d.powi(3);
    Ok(MeanVar {
        mean_cx: (2.0 + (l + m) * x) / d,
        var_cx: 4.0 * (l + m) / d3 + 8.0 * l * m * x / d3,
        mean_ax: (2.0 + a * (l + m) * x) / (a * d),
        var_ax: 4.0 * (l + m * (2.0 * a - 1.0)) / (a * a * d3) + 8.0 * l * m * x / d3,
    })
}

/// The variances of `C_x` and `A_x` in the form they are usually printed.
///
/// These do not match the second moments (they can even be negative) and are
/// exposed only for regression testing.
pub fn variances_as_printed(p: &ModelParams) -> Result<(f64, f64)> {
    p.validate()?;
    let (l, m, a, x) = (p.lambda, p.mu, p.alpha, p.x);
    let d = l - m;
    let tail = (l + m).powi(2) * x * x / (2.0 * d * d);
    let var_c = 4.0 * m / d.powi(3) - 2.0 * (l * l - m * m - 2.0 * l * m) * x / d.powi(3) - tail;
    let var_a = 4.0 * m / (a * d.powi(3))
        - 2.0 * (l * l - m * m - 2.0 * a * l * m) * x / (a * d.powi(3))
        - tail;
    Ok((var_c, var_a))
}
