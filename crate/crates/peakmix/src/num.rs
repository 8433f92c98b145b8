//! Scaled nonnegative reals.
//!
//! Normalizing constants of a charge can under- or overflow `f64` when many
//! small likelihood factors are multiplied together, so they are carried as a
//! `(mantissa, exponent)` pair representing `mantissa * exp(exponent)` with
//! `mantissa >= 0`.

/// A nonnegative real number stored as `mantissa * exp(exponent)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled {
    pub mantissa: f64,
    pub exponent: f64,
}

impl Scaled {
    pub fn zero() -> Self {
        Scaled {
            mantissa: 0.0,
            exponent: 0.0,
        }
    }

    pub fn one() -> Self {
        Scaled {
            mantissa: 1.0,
            exponent: 0.0,
        }
    }

    pub fn new(mantissa: f64, exponent: f64) -> Self {
        debug_assert!(mantissa >= 0.0);
        Scaled { mantissa, exponent }
    }

    pub fn from_ln(ln: f64) -> Self {
        if ln == f64::NEG_INFINITY {
            Scaled::zero()
        } else {
            Scaled {
                mantissa: 1.0,
                exponent: ln,
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0.0
    }

    /// Natural logarithm; `-inf` for zero.
    pub fn ln(&self) -> f64 {
        if self.mantissa <= 0.0 {
            f64::NEG_INFINITY
        } else {
            self.mantissa.ln() + self.exponent
        }
    }

    /// Collapse to a plain `f64`; may under- or overflow for extreme scales.
    pub fn value(&self) -> f64 {
        self.mantissa * self.exponent.exp()
    }

    pub fn mul(&self, other: &Scaled) -> Scaled {
        Scaled {
            mantissa: self.mantissa * other.mantissa,
            exponent: self.exponent + other.exponent,
        }
    }

    /// `ln(self / other)`; requires `other` nonzero.
    pub fn ln_ratio(&self, other: &Scaled) -> f64 {
        self.ln() - other.ln()
    }
}

/// Round to 12 significant digits for report output.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}
