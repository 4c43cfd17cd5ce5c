//! Modified Bessel functions of the first kind and the generalized
//! hypergeometric series `0F1`, `1F2` and `2F1`.
//!
//! Every series is summed by a ratio update (no factorials are formed), in a
//! double-double accumulator, with a floating log-scale so that arguments such
//! as `lambda * mu * t^2 ~ 10^5` do not overflow. Public `f64` entry points
//! return [`Error::Overflow`] when the final value leaves the `f64` range; the
//! `*_scaled` variants never do.

mod accum;

pub use accum::{DoubleDouble, Scaled, ScaledSum};

use crate::error::{Error, Result};

/// Truncation policy shared by every infinite series in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    /// Relative size below which a term counts as negligible.
    pub rel_tol: f64,
    /// Hard cap on the number of terms of any single series.
    pub max_terms: usize,
    /// Number of successive negligible terms required to stop.
    pub consecutive_small: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            rel_tol: 1e-12,
            max_terms: 500,
            consecutive_small: 3,
        }
    }
}

impl SeriesControl {
    pub fn new(rel_tol: f64, max_terms: usize, consecutive_small: usize) -> Result<Self> {
        let ctrl = SeriesControl {
            rel_tol,
            max_terms,
            consecutive_small,
        };
        ctrl.validate()?;
        Ok(ctrl)
    }

    pub fn with_max_terms(mut self, max_terms: usize) -> Self {
        self.max_terms = max_terms;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::domain(
                "SeriesControl",
                format!("rel_tol must lie in (0, 1), got {}", self.rel_tol),
            ));
        }
        if self.max_terms < 1 || self.consecutive_small < 1 {
            return Err(Error::domain(
                "SeriesControl",
                "max_terms and consecutive_small must be at least 1",
            ));
        }
        Ok(())
    }
}

/// The consecutive-small stopping rule.
#[derive(Debug, Clone)]
pub(crate) struct StopRule {
    rel_tol: f64,
    needed: usize,
    run: usize,
}

impl StopRule {
    pub(crate) fn new(ctrl: &SeriesControl) -> Self {
        StopRule {
            rel_tol: ctrl.rel_tol,
            needed: ctrl.consecutive_small,
            run: 0,
        }
    }

    /// Records one term; returns true once enough successive terms were small.
    pub(crate) fn observe(&mut self, term_abs: f64, sum_abs: f64) -> bool {
        if term_abs <= self.rel_tol * sum_abs {
            self.run += 1;
        } else {
            self.run = 0;
        }
        self.run >= self.needed
    }
}

const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

/// Sums `t_0 + t_1 + ...` where `t_n = t_{n-1} * ratio(n)`.
///
/// A ratio of exactly zero terminates the series. With `skip_first` the sum
/// starts at `t_1`.
pub(crate) fn sum_series(
    series: &'static str,
    first: Scaled,
    skip_first: bool,
    ctrl: &SeriesControl,
    mut ratio: impl FnMut(usize) -> f64,
) -> Result<Scaled> {
    ctrl.validate()?;
    if first.is_zero() {
        return Ok(Scaled::ZERO);
    }
    let ln_rescale = -RESCALE_BY.ln();
    let mut ln_scale = first.ln_scale;
    let mut term = first.mantissa;
    let mut acc = if skip_first {
        DoubleDouble::ZERO
    } else {
        DoubleDouble::new(term)
    };
    let mut stop = StopRule::new(ctrl);
    let mut n = 1usize;
    loop {
        if n >= ctrl.max_terms {
            return Err(Error::Truncation {
                series,
                terms: n,
                last_term: Scaled {
                    mantissa: term.abs(),
                    ln_scale,
                }
                .value(),
            });
        }
        let r = ratio(n);
        if r == 0.0 {
            break;
        }
        term *= r;
        if !term.is_finite() {
            return Err(Error::Overflow { what: series });
        }
        if term.abs() > RESCALE_ABOVE {
            term *= RESCALE_BY;
            acc.scale(RESCALE_BY);
            ln_scale += ln_rescale;
        }
        acc.add(term);
        // Bound the remainder by a geometric tail at the current ratio.
        let tail = if r.abs() < 1.0 {
            term.abs() / (1.0 - r.abs())
        } else {
            f64::INFINITY
        };
        if stop.observe(tail, acc.value().abs()) {
            break;
        }
        n += 1;
    }
    Ok(Scaled {
        mantissa: acc.value(),
        ln_scale,
    }
    .normalized())
}

fn finite(series: &'static str, s: Scaled) -> Result<f64> {
    let v = s.value();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow { what: series })
    }
}

fn nonpositive_integer(a: f64) -> Option<usize> {
    (a <= 0.0 && a.fract() == 0.0).then(|| (-a) as usize)
}

/// Rejects parameter sets whose denominator Pochhammer symbol vanishes at or
/// before the index where a numerator symbol terminates the series.
fn check_poles(series: &'static str, numer: &[f64], denom: &[f64]) -> Result<()> {
    // (a)_n = 0 for every n >= 1 - a when a is a nonpositive integer.
    let terminates_at = numer
        .iter()
        .filter_map(|&a| nonpositive_integer(a).map(|k| k + 1))
        .min();
    for &b in denom {
        if let Some(k) = nonpositive_integer(b) {
            let pole = k + 1;
            if terminates_at.is_none_or(|stop| pole <= stop) {
                return Err(Error::Pole {
                    series,
                    index: pole,
                });
            }
        }
    }
    Ok(())
}

fn check_finite(op: &'static str, args: &[f64]) -> Result<()> {
    if args.iter().all(|a| a.is_finite()) {
        Ok(())
    } else {
        Err(Error::domain(op, "arguments must be finite"))
    }
}

/// `(d)_n = d (d + 1) ... (d + n - 1)`, with `(d)_0 = 1`.
pub fn rising_factorial(d: f64, n: u32) -> f64 {
    (0..n).fold(1.0, |acc, k| acc * (d + k as f64))
}

/// Generalized binomial coefficient `x (x - 1) ... (x - h + 1) / h!`.
pub fn gen_binom(x: f64, h: u32) -> f64 {
    (0..h).fold(1.0, |acc, k| acc * (x - k as f64) / (k + 1) as f64)
}

/// `ln n!`, exact summation for the small arguments used here.
pub(crate) fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `I_n(z)` as a [`Scaled`] value.
pub fn bessel_i_scaled(n: u32, z: f64, ctrl: &SeriesControl) -> Result<Scaled> {
    check_finite("bessel_i", &[z])?;
    if z < 0.0 {
        return Err(Error::domain(
            "bessel_i",
            format!("z must be >= 0, got {z}"),
        ));
    }
    if z == 0.0 {
        return Ok(if n == 0 { Scaled::ONE } else { Scaled::ZERO });
    }
    let half = 0.5 * z;
    let first = Scaled::from_ln(n as f64 * half.ln() - ln_factorial(n), false);
    let q = half * half;
    let nf = n as f64;
    sum_series("bessel_i", first, false, ctrl, |k| {
        let k = k as f64;
        q / (k * (k + nf))
    })
}

/// Modified Bessel function of the first kind `I_n(z)` for `z >= 0`.
pub fn bessel_i(n: u32, z: f64, ctrl: &SeriesControl) -> Result<f64> {
    finite("bessel_i", bessel_i_scaled(n, z, ctrl)?)
}

fn hyper_0f1_impl(b: f64, z: f64, ctrl: &SeriesControl, skip_first: bool) -> Result<Scaled> {
    check_finite("hyper_0f1", &[b, z])?;
    check_poles("hyper_0f1", &[], &[b])?;
    sum_series("hyper_0f1", Scaled::ONE, skip_first, ctrl, |n| {
        let n = n as f64;
        z / ((b + n - 1.0) * n)
    })
}

pub fn hyper_0f1_scaled(b: f64, z: f64, ctrl: &SeriesControl) -> Result<Scaled> {
    hyper_0f1_impl(b, z, ctrl, false)
}

/// `0F1(; b; z) = sum z^n / ((b)_n n!)`.
pub fn hyper_0f1(b: f64, z: f64, ctrl: &SeriesControl) -> Result<f64> {
    finite("hyper_0f1", hyper_0f1_scaled(b, z, ctrl)?)
}

fn hyper_1f2_impl(
    a: f64,
    b: f64,
    c: f64,
    z: f64,
    ctrl: &SeriesControl,
    skip_first: bool,
) -> Result<Scaled> {
    check_finite("hyper_1f2", &[a, b, c, z])?;
    check_poles("hyper_1f2", &[a], &[b, c])?;
    sum_series("hyper_1f2", Scaled::ONE, skip_first, ctrl, |n| {
        let m = n as f64 - 1.0;
        (a + m) * z / ((b + m) * (c + m) * n as f64)
    })
}

pub fn hyper_1f2_scaled(a: f64, b: f64, c: f64, z: f64, ctrl: &SeriesControl) -> Result<Scaled> {
    hyper_1f2_impl(a, b, c, z, ctrl, false)
}

/// `1F2(a; b, c; z) - 1`, summed without forming the leading unit term.
pub fn hyper_1f2_minus_one(a: f64, b: f64, c: f64, z: f64, ctrl: &SeriesControl) -> Result<Scaled> {
    hyper_1f2_impl(a, b, c, z, ctrl, true)
}

/// `1F2(a; b, c; z) = sum (a)_n / ((b)_n (c)_n) z^n / n!`.
pub fn hyper_1f2(a: f64, b: f64, c: f64, z: f64, ctrl: &SeriesControl) -> Result<f64> {
    finite("hyper_1f2", hyper_1f2_scaled(a, b, c, z, ctrl)?)
}

/// Gauss hypergeometric series `2F1(a, b; c; z)`.
///
/// Only the disc of convergence `|z| < 1` is supported, plus any `z` when
/// `a` or `b` is a nonpositive integer (terminating series).
pub fn hyper_2f1(a: f64, b: f64, c: f64, z: f64, ctrl: &SeriesControl) -> Result<f64> {
    check_finite("hyper_2f1", &[a, b, c, z])?;
    let terminating = nonpositive_integer(a).is_some() || nonpositive_integer(b).is_some();
    if !terminating && z.abs() >= 1.0 {
        return Err(Error::domain(
            "hyper_2f1",
            format!("|z| < 1 required for a non-terminating series, got z = {z}"),
        ));
    }
    check_poles("hyper_2f1", &[a, b], &[c])?;
    if !terminating
        && (nonpositive_integer(c - a).is_some() || nonpositive_integer(c - b).is_some())
    {
        // Euler: 2F1(a, b; c; z) = (1 - z)^(c - a - b) 2F1(c - a, c - b; c; z), a polynomial here.
        let poly = hyper_2f1(c - a, c - b, c, z, ctrl)?;
        return finite(
            "hyper_2f1",
            Scaled::ONE.mul_f64((1.0 - z).powf(c - a - b) * poly),
        );
    }
    let s = sum_series("hyper_2f1", Scaled::ONE, false, ctrl, |n| {
        let m = n as f64 - 1.0;
        (a + m) * (b + m) * z / ((c + m) * n as f64)
    })?;
    finite("hyper_2f1", s)
}
