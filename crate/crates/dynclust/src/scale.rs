//! Powers of `(1+ε)` and the radius type built on them.
//!
//! Radii are stored as integer exponents so that "is a power of (1+ε)" and
//! "did not increase" are exact integer facts rather than float comparisons.

use serde::{Serialize, Serializer};

use crate::error::{invalid, Result};

/// Geometric scale with base `1+ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerScale {
    eps: f64,
    base: f64,
    ln_base: f64,
}

impl PowerScale {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return invalid(format!("scale parameter must be positive, got {eps}"));
        }
        let base = 1.0 + eps;
        Ok(Self { eps, base, ln_base: base.ln() })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    /// `(1+ε)^j`. Every radius value in the crate goes through here, so two
    /// equal exponents always produce bit-identical floats.
    pub fn value(&self, j: i64) -> f64 {
        self.base.powi(j as i32)
    }

    /// Smallest `j ≥ 0` with `(1+ε)^j ≥ x`, or `None` when `x` is infinite.
    pub fn ceil_exp(&self, x: f64) -> Option<u32> {
        if x.is_infinite() {
            return None;
        }
        if x <= 1.0 {
            return Some(0);
        }
        let mut j = (x.ln() / self.ln_base).ceil().max(0.0) as i64;
        while j > 0 && self.value(j - 1) >= x {
            j -= 1;
        }
        while self.value(j) < x {
            j += 1;
        }
        Some(j as u32)
    }

    /// Largest `j` with `(1+ε)^j ≤ x` for finite `x > 0`.
    pub fn floor_exp(&self, x: f64) -> i64 {
        debug_assert!(x > 0.0 && x.is_finite());
        let mut j = (x.ln() / self.ln_base).floor() as i64;
        while self.value(j) > x {
            j -= 1;
        }
        while self.value(j + 1) <= x {
            j += 1;
        }
        j
    }

    /// `log_{1+ε}(x)` for counter bounds.
    pub fn log(&self, x: f64) -> f64 {
        x.ln() / self.ln_base
    }

    pub fn radius_value(&self, r: Radius) -> f64 {
        match r {
            Radius::Zero => 0.0,
            Radius::Pow(j) => self.value(j as i64),
            Radius::Infinite => f64::INFINITY,
        }
    }

    /// Radius of the smallest power covering `x` (∞ stays ∞).
    pub fn radius_of(&self, x: f64) -> Radius {
        match self.ceil_exp(x) {
            Some(j) => Radius::Pow(j),
            None => Radius::Infinite,
        }
    }
}

/// Smallest power `(1+ε)^j`, `j ≥ 0`, that is at least `x`.
pub fn round_up_pow(x: f64, eps: f64) -> Result<f64> {
    if !(x > 0.0) {
        return invalid(format!("round_up_pow needs x > 0, got {x}"));
    }
    let scale = PowerScale::new(eps)?;
    Ok(match scale.ceil_exp(x) {
        Some(j) => scale.value(j as i64),
        None => f64::INFINITY,
    })
}

/// A level radius. `Zero` only appears as the virtual radius before level 0
/// (and as the last radius when there are no sampling levels). `Infinite`
/// stands for an undefined radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Radius {
    Zero,
    Pow(u32),
    Infinite,
}

impl Radius {
    pub fn is_power(self) -> bool {
        matches!(self, Radius::Pow(_))
    }

    pub fn exponent(self) -> Option<u32> {
        match self {
            Radius::Pow(j) => Some(j),
            _ => None,
        }
    }
}

impl Serialize for Radius {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Radius::Zero => s.serialize_i64(0),
            Radius::Pow(j) => s.serialize_u32(*j),
            Radius::Infinite => s.serialize_none(),
        }
    }
}

/// `⌈β·m⌉`, robust to `β·m` landing a hair above an integer.
pub fn ceil_fraction(beta: f64, m: usize) -> usize {
    let x = beta * m as f64;
    let c = x.round();
    if (x - c).abs() <= 1e-9 * x.max(1.0) {
        c as usize
    } else {
        x.ceil() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_up_examples() {
        assert_eq!(round_up_pow(1.0, 0.1).unwrap(), 1.0);
        assert_eq!(round_up_pow(1.5, 0.5).unwrap(), 1.5);
        assert_eq!(round_up_pow(5.0, 0.5).unwrap(), 5.0625);
        assert!(round_up_pow(0.0, 0.5).is_err());
        assert!(round_up_pow(-2.0, 0.5).is_err());
    }

    #[test]
    fn below_one_rounds_to_one() {
        assert_eq!(round_up_pow(0.25, 0.1).unwrap(), 1.0);
    }

    #[test]
    fn exponents_bracket() {
        let s = PowerScale::new(0.1).unwrap();
        for x in [1.0, 1.1, 1.2, 7.0, 100.0, 12345.678] {
            let j = s.ceil_exp(x).unwrap() as i64;
            assert!(s.value(j) >= x);
            assert!(j == 0 || s.value(j - 1) < x);
            let f = s.floor_exp(x);
            assert!(s.value(f) <= x && s.value(f + 1) > x);
        }
    }

    #[test]
    fn radius_order() {
        assert!(Radius::Zero < Radius::Pow(0));
        assert!(Radius::Pow(3) < Radius::Pow(4));
        assert!(Radius::Pow(u32::MAX) < Radius::Infinite);
    }

    #[test]
    fn ceil_fraction_is_stable() {
        assert_eq!(ceil_fraction(0.25, 200), 50);
        assert_eq!(ceil_fraction(0.1, 30), 3);
        assert_eq!(ceil_fraction(0.25, 7), 2);
        assert_eq!(ceil_fraction(0.5, 1), 1);
    }
}
