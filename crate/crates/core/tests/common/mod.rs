#![allow(dead_code)]

use telegraph_core::numeric::{try_integrate_with, QuadConfig, Upper};
use telegraph_core::{ModelParams, Result, SeriesControl};

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Series control with enough room for the far tails of the densities.
pub fn wide() -> SeriesControl {
    SeriesControl::default().with_max_terms(20_000)
}

pub fn params(lambda: f64, mu: f64, alpha: f64, x: f64) -> ModelParams {
    ModelParams::new(lambda, mu, alpha, x).unwrap()
}

/// `int_a^inf f` with an exponential envelope of rate `decay`.
pub fn integral<F>(f: F, a: f64, decay: f64, tol: f64) -> f64
where
    F: FnMut(f64) -> Result<f64>,
{
    try_integrate_with(
        f,
        a,
        Upper::Infinite { decay_rate: decay },
        &QuadConfig::new(tol),
    )
    .unwrap()
    .value
}

pub fn finite_integral<F>(f: F, a: f64, b: f64, tol: f64) -> f64
where
    F: FnMut(f64) -> Result<f64>,
{
    try_integrate_with(f, a, Upper::Finite(b), &QuadConfig::new(tol))
        .unwrap()
        .value
}

/// `I_1(z) e^{-z}` from `(1/pi) int_0^pi e^{z (cos th - 1)} cos th d th` by the
/// trapezoidal rule, which converges geometrically for periodic integrands.
pub fn bessel_i1_scaled_trapezoid(z: f64) -> f64 {
    let n = 2000;
    let h = std::f64::consts::PI / n as f64;
    let mut s = 0.5 * (1.0 + -(-2.0 * z).exp());
    for k in 1..n {
        let th = k as f64 * h;
        s += (z * (th.cos() - 1.0)).exp() * th.cos();
    }
    s * h / std::f64::consts::PI
}

/// Busy-period density of an M/M/1 queue with arrival rate `a` and service
/// rate `b`: `sqrt(b / a) e^{-(a + b) t} I_1(2 t sqrt(a b)) / t`.
pub fn mm1_busy_period_density(t: f64, a: f64, b: f64) -> f64 {
    let z = 2.0 * t * (a * b).sqrt();
    (b / a).sqrt() * (z - (a + b) * t).exp() * bessel_i1_scaled_trapezoid(z) / t
}
