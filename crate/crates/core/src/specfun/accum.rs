//! Accumulators for long series: double-double summation and a floating
//! natural-log scale so that terms far outside the `f64` range can be summed.

use std::f64::consts::LN_2;

/// Error-free transformation `a + b = s + e`.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// Double-double running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.hi, x);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        self.hi = hi;
        self.lo = lo;
    }

    /// Multiplies by `f`; exact when `f` is a power of two.
    #[inline]
    pub fn scale(&mut self, f: f64) {
        self.hi *= f;
        self.lo *= f;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

/// A real number stored as `mantissa * exp(ln_scale)`.
///
/// Series such as `I_0(2 sqrt(z))` for large `z` overflow `f64` long before
/// the exponentially small prefactors they are multiplied with underflow;
/// carrying the scale separately lets the two meet in log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub mantissa: f64,
    pub ln_scale: f64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled {
        mantissa: 0.0,
        ln_scale: 0.0,
    };
    pub const ONE: Scaled = Scaled {
        mantissa: 1.0,
        ln_scale: 0.0,
    };

    pub fn from_f64(x: f64) -> Self {
        Scaled {
            mantissa: x,
            ln_scale: 0.0,
        }
        .normalized()
    }

    /// `sign * exp(ln_abs)`.
    pub fn from_ln(ln_abs: f64, negative: bool) -> Self {
        Scaled {
            mantissa: if negative { -1.0 } else { 1.0 },
            ln_scale: ln_abs,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0.0
    }

    /// `ln |self|`; `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.abs().ln() + self.ln_scale
    }

    /// Converts back to `f64`, overflowing to `±inf` and underflowing to zero.
    pub fn value(&self) -> f64 {
        if self.mantissa == 0.0 {
            return 0.0;
        }
        if self.ln_scale.abs() < 700.0 {
            let v = self.mantissa * self.ln_scale.exp();
            if v.is_finite() && v.abs() >= f64::MIN_POSITIVE {
                return v;
            }
        }
        self.mantissa.signum() * self.ln_abs().exp()
    }

    /// Multiplies by `exp(x)`.
    pub fn mul_exp(self, x: f64) -> Self {
        Scaled {
            mantissa: self.mantissa,
            ln_scale: self.ln_scale + x,
        }
    }

    pub fn mul_f64(self, x: f64) -> Self {
        Scaled {
            mantissa: self.mantissa * x,
            ln_scale: self.ln_scale,
        }
        .normalized()
    }

    pub fn mul(self, other: Scaled) -> Self {
        Scaled {
            mantissa: self.mantissa * other.mantissa,
            ln_scale: self.ln_scale + other.ln_scale,
        }
        .normalized()
    }

    pub fn add(self, other: Scaled) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let top = self.ln_scale.max(other.ln_scale);
        Scaled {
            mantissa: self.mantissa * (self.ln_scale - top).exp()
                + other.mantissa * (other.ln_scale - top).exp(),
            ln_scale: top,
        }
        .normalized()
    }

    /// Moves the binary exponent of the mantissa into `ln_scale` (exact on the
    /// mantissa).
    pub fn normalized(self) -> Self {
        let m = self.mantissa;
        if m == 0.0 || !m.is_finite() {
            return self;
        }
        let e = m.abs().log2().floor();
        if e.abs() < 64.0 {
            return self;
        }
        Scaled {
            mantissa: m * (-e).exp2(),
            ln_scale: self.ln_scale + e * LN_2,
        }
    }
}

/// Sum of [`Scaled`] terms whose magnitudes may span thousands of orders of
/// magnitude.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScaledSum {
    acc: DoubleDouble,
    ln_scale: f64,
    started: bool,
}

impl ScaledSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, term: Scaled) {
        if term.is_zero() {
            return;
        }
        if !self.started {
            self.acc = DoubleDouble::new(term.mantissa);
            self.ln_scale = term.ln_scale;
            self.started = true;
            return;
        }
        let rel = term.ln_scale - self.ln_scale;
        if rel + term.mantissa.abs().ln() > 460.0 {
            let shift = term.ln_scale + term.mantissa.abs().ln();
            self.acc.scale((self.ln_scale - shift).exp());
            self.ln_scale = shift;
            self.acc.add(term.mantissa * (term.ln_scale - shift).exp());
        } else {
            self.acc.add(term.mantissa * rel.exp());
        }
    }

    pub fn value(&self) -> Scaled {
        Scaled {
            mantissa: self.acc.value(),
            ln_scale: self.ln_scale,
        }
        .normalized()
    }
}
