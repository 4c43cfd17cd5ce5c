//! Numerical machinery used to cross-check the closed forms: adaptive
//! Gauss-Kronrod quadrature on finite and semi-infinite intervals, numerical
//! MGFs and moments, finite differences and the Kolmogorov-Smirnov statistic.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::specfun::DoubleDouble;

// 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Outcome of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Estimated absolute error, including `tail_bound`.
    pub abs_error_estimate: f64,
    pub evaluations: usize,
    /// Bound on the neglected tail beyond the truncation point (zero on
    /// finite intervals).
    pub tail_bound: f64,
}

/// Upper integration limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Upper {
    Finite(f64),
    /// `+inf`, for integrands eventually dominated by `C exp(-decay_rate t)`
    /// with a non-increasing prefactor.
    Infinite {
        decay_rate: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Semi-infinite domains are cut where the envelope bound on the tail
    /// drops below `tail_fraction * |value|` (or `tail_fraction` when the
    /// value is below one).
    pub tail_fraction: f64,
}

impl QuadConfig {
    pub fn new(tol: f64) -> Self {
        QuadConfig {
            abs_tol: tol,
            rel_tol: tol,
            max_subdivisions: 2000,
            tail_fraction: 1e-16,
        }
    }

    pub fn with_tail_fraction(mut self, tail_fraction: f64) -> Self {
        self.tail_fraction = tail_fraction;
        self
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F>(f: &mut F, a: f64, b: f64) -> Result<Panel>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    let mut fv = [0.0f64; 14];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv[2 * j] = f1;
        fv[2 * j + 1] = f2;
        kron += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kron * half;
    let mut error = ((kron - gauss) * half).abs();
    // QUADPACK-style rescaling of the raw Gauss/Kronrod difference.
    let mean = 0.5 * kron;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv[2 * j] - mean).abs() + (fv[2 * j + 1] - mean).abs());
    }
    asc *= half.abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * value.abs();
    if !value.is_finite() {
        return Err(Error::domain(
            "integrate",
            format!("integrand is not finite on [{a}, {b}]"),
        ));
    }
    Ok(Panel {
        a,
        b,
        value,
        error: error.max(floor),
    })
}

/// Adaptive 15-point Gauss-Kronrod quadrature of a fallible integrand.
pub fn try_integrate_with<F>(mut f: F, a: f64, upper: Upper, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(cfg.abs_tol > 0.0 || cfg.rel_tol > 0.0) {
        return Err(Error::domain("integrate", "tolerance must be positive"));
    }
    let mut evaluations = 0usize;
    let mut counted = |x: f64| {
        evaluations += 1;
        f(x)
    };
    let mut heap = BinaryHeap::new();
    let mut tail_bound = 0.0;
    match upper {
        Upper::Finite(b) => {
            if !(a.is_finite() && b.is_finite()) || b < a {
                return Err(Error::domain(
                    "integrate",
                    format!("invalid interval [{a}, {b}]"),
                ));
            }
            if b > a {
                heap.push(kronrod(&mut counted, a, b)?);
            }
        }
        Upper::Infinite { decay_rate } => {
            if !(decay_rate > 0.0 && decay_rate.is_finite()) {
                return Err(Error::domain(
                    "integrate",
                    "decay_rate must be positive and finite",
                ));
            }
            // Chunks of doubling length until the envelope bound on the
            // remaining tail is negligible.
            let mut len = (4.0 / decay_rate).max(1.0);
            let mut lo = a;
            let mut acc = 0.0;
            let mut chunks = 0;
            loop {
                let hi = lo + len;
                let panel = kronrod(&mut counted, lo, hi)?;
                acc += panel.value;
                heap.push(panel);
                let f_hi = counted(hi)?.abs();
                let f_mid = counted(0.5 * (lo + hi))?.abs() * (-0.5 * decay_rate * len).exp();
                let bound = f_hi.max(f_mid) / decay_rate;
                let threshold = cfg.tail_fraction * acc.abs().max(1.0);
                chunks += 1;
                if bound <= threshold {
                    tail_bound = bound;
                    break;
                }
                if chunks > 64 {
                    return Err(Error::Quadrature {
                        subdivisions: heap.len(),
                        abs_error_estimate: bound,
                    });
                }
                lo = hi;
                len *= 2.0;
            }
        }
    }
    loop {
        let mut total = DoubleDouble::ZERO;
        let mut err = 0.0;
        for p in heap.iter() {
            total.add(p.value);
            err += p.error;
        }
        let value = total.value();
        let err_total = err + tail_bound;
        if err_total <= cfg.target(value) || heap.is_empty() {
            return Ok(QuadResult {
                value,
                abs_error_estimate: err_total,
                evaluations,
                tail_bound,
            });
        }
        if heap.len() >= cfg.max_subdivisions {
            return Err(Error::Quadrature {
                subdivisions: heap.len(),
                abs_error_estimate: err_total,
            });
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel can no longer be split in floating point.
            return Err(Error::Quadrature {
                subdivisions: heap.len() + 1,
                abs_error_estimate: err_total,
            });
        }
        heap.push(kronrod(&mut counted, worst.a, mid)?);
        heap.push(kronrod(&mut counted, mid, worst.b)?);
    }
}

/// Integrates `f` over `[a, upper)` to absolute and relative tolerance `tol`.
pub fn integrate<F>(mut f: F, a: f64, upper: Upper, tol: f64) -> Result<QuadResult>
where
    F: FnMut(f64) -> f64,
{
    try_integrate_with(|x| Ok(f(x)), a, upper, &QuadConfig::new(tol))
}

pub fn try_integrate<F>(f: F, a: f64, upper: Upper, tol: f64) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    try_integrate_with(f, a, upper, &QuadConfig::new(tol))
}

/// `E[e^{sY}]` for a density on `[a, inf)` decaying like `exp(-decay_rate y)`.
pub fn numeric_mgf<F>(mut pdf: F, a: f64, decay_rate: f64, s: f64, cfg: &QuadConfig) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if s >= decay_rate {
        return Err(Error::domain(
            "numeric_mgf",
            format!("s = {s} is outside the region of convergence (< {decay_rate})"),
        ));
    }
    let q = try_integrate_with(
        |y| Ok((s * y).exp() * pdf(y)?),
        a,
        Upper::Infinite {
            decay_rate: decay_rate - s,
        },
        cfg,
    )?;
    Ok(q.value)
}

/// `E[Y^n]` for a density on `[a, inf)` decaying like `exp(-decay_rate y)`.
pub fn numeric_moment<F>(
    mut pdf: F,
    a: f64,
    decay_rate: f64,
    n: u32,
    cfg: &QuadConfig,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    // y^n e^{-r y} is bounded by its value at T times e^{-r (y - T) / 2} once
    // T >= 2n / r, hence the halved envelope rate.
    let q = try_integrate_with(
        |y| Ok(y.powi(n as i32) * pdf(y)?),
        a,
        Upper::Infinite {
            decay_rate: 0.5 * decay_rate,
        },
        cfg,
    )?;
    Ok(q.value)
}

/// Central finite-difference estimate of the `order`-th derivative (1 or 2)
/// of `f` at `x` with step `h`.
pub fn central_difference<F>(mut f: F, x: f64, order: u32, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    match order {
        1 => Ok((f(x + h)? - f(x - h)?) / (2.0 * h)),
        2 => Ok((f(x + h)? - 2.0 * f(x)? + f(x - h)?) / (h * h)),
        3 => Ok(
            (f(x + 2.0 * h)? - 2.0 * f(x + h)? + 2.0 * f(x - h)? - f(x - 2.0 * h)?)
                / (2.0 * h * h * h),
        ),
        _ => Err(Error::domain(
            "central_difference",
            "order must be 1, 2 or 3",
        )),
    }
}

/// Derivative of a CDF at `x` by Richardson-extrapolated differences.
///
/// The step is shrunk so that every abscissa stays inside `[lo, hi]`; at the
/// endpoints themselves one-sided second-order differences are used.
pub fn cdf_derivative<F>(mut cdf: F, x: f64, h: f64, lo: f64, hi: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo <= x && x <= hi) || h <= 0.0 {
        return Err(Error::domain(
            "cdf_derivative",
            format!("x = {x} must lie in [{lo}, {hi}] and h > 0"),
        ));
    }
    let room = (x - lo).min(hi - x);
    if room >= 0.25 * h {
        let h = h.min(room);
        let mut d = |h: f64| -> Result<f64> { Ok((cdf(x + h)? - cdf(x - h)?) / (2.0 * h)) };
        let coarse = d(h)?;
        let fine = d(0.5 * h)?;
        return Ok((4.0 * fine - coarse) / 3.0);
    }
    // One-sided: D(h) = (-3F(x) + 4F(x+h) - F(x+2h)) / 2h, pointing inward.
    let dir = if x - lo < hi - x { 1.0 } else { -1.0 };
    let h = h.min(0.5 * (hi - lo));
    let f0 = cdf(x)?;
    let mut d = |h: f64| -> Result<f64> {
        Ok(dir * (-3.0 * f0 + 4.0 * cdf(x + dir * h)? - cdf(x + 2.0 * dir * h)?) / (2.0 * h))
    };
    let coarse = d(h)?;
    let fine = d(0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and
/// `cdf`.
pub fn ks_statistic<F>(samples: &[f64], mut cdf: F) -> f64
where
    F: FnMut(f64) -> f64,
{
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let fx = cdf(x);
        let above = (i + 1) as f64 / n - fx;
        let below = fx - i as f64 / n;
        d.max(above).max(below)
    })
}

/// Asymptotic critical value of the one-sample KS statistic at the 1% level.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}
