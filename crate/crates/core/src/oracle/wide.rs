//! Floating point with an `f64` mantissa and an unbounded exponent.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// `mantissa · 2^exponent` with `|mantissa| ∈ [0.5, 1)`, or exact zero
/// (mantissa 0, exponent 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WideFloat {
    mantissa: f64,
    exponent: i64,
}

/// `2^e` for `e` in the normal exponent range.
fn pow2(e: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// Splits a finite non-zero `x` into `m · 2^e`, `|m| ∈ [0.5, 1)`.
fn frexp(x: f64) -> (f64, i64) {
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    if biased == 0 {
        let (m, e) = frexp(x * pow2(54));
        return (m, e - 54);
    }
    let m = f64::from_bits((bits & !(0x7ff << 52)) | (1022 << 52));
    (m, biased - 1022)
}

/// `x · 2^e` evaluated in two halves so neither factor leaves the normal range.
fn ldexp(x: f64, e: i64) -> f64 {
    if e > 2100 {
        return x * f64::INFINITY;
    }
    if e < -2200 {
        return x * 0.0;
    }
    let half = e / 2;
    let rest = e - half;
    if half.abs() > 1022 || rest.abs() > 1022 {
        let third = e / 3;
        return x * pow2(third) * pow2(third) * pow2(e - 2 * third);
    }
    x * pow2(half) * pow2(rest)
}

impl WideFloat {
    pub const ZERO: WideFloat = WideFloat { mantissa: 0.0, exponent: 0 };

    fn normalized(mantissa: f64, exponent: i64) -> Self {
        if mantissa == 0.0 {
            return Self::ZERO;
        }
        let (m, e) = frexp(mantissa);
        WideFloat { mantissa: m, exponent: exponent + e }
    }

    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "WideFloat from non-finite value");
        Self::normalized(x, 0)
    }

    pub fn from_parts(mantissa: f64, exponent: i64) -> Self {
        Self::normalized(mantissa, exponent)
    }

    pub fn mantissa(&self) -> f64 {
        self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0.0
    }

    /// Nearest `f64`; gradual underflow to subnormals and zero, overflow to ±∞.
    pub fn to_f64(&self) -> f64 {
        ldexp(self.mantissa, self.exponent)
    }

    pub fn abs(&self) -> Self {
        WideFloat { mantissa: self.mantissa.abs(), exponent: self.exponent }
    }

    pub fn sqrt(&self) -> Self {
        assert!(self.mantissa >= 0.0, "sqrt of negative WideFloat");
        if self.is_zero() {
            return Self::ZERO;
        }
        let (m, e) = if self.exponent % 2 != 0 {
            (self.mantissa * 2.0, self.exponent - 1)
        } else {
            (self.mantissa, self.exponent)
        };
        Self::normalized(m.sqrt(), e / 2)
    }

    /// `log2 |x|` (−∞ for zero).
    pub fn log2_abs(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mantissa.abs().log2() + self.exponent as f64
        }
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = WideFloat::from_f64(1.0);
        let mut base = *self;
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            n >>= 1;
        }
        acc
    }
}

impl Mul for WideFloat {
    type Output = WideFloat;
    fn mul(self, rhs: WideFloat) -> WideFloat {
        WideFloat::normalized(self.mantissa * rhs.mantissa, self.exponent + rhs.exponent)
    }
}

impl Div for WideFloat {
    type Output = WideFloat;
    fn div(self, rhs: WideFloat) -> WideFloat {
        assert!(!rhs.is_zero(), "WideFloat division by zero");
        WideFloat::normalized(self.mantissa / rhs.mantissa, self.exponent - rhs.exponent)
    }
}

impl Add for WideFloat {
    type Output = WideFloat;
    fn add(self, rhs: WideFloat) -> WideFloat {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.exponent >= rhs.exponent { (self, rhs) } else { (rhs, self) };
        let shift = big.exponent - small.exponent;
        if shift > 60 {
            return big;
        }
        // Scaling by 2^−shift (≤ 60) is exact for a mantissa in [0.5, 1).
        WideFloat::normalized(big.mantissa + small.mantissa * pow2(-shift), big.exponent)
    }
}

impl Neg for WideFloat {
    type Output = WideFloat;
    fn neg(self) -> WideFloat {
        WideFloat { mantissa: -self.mantissa, exponent: self.exponent }
    }
}

impl Sub for WideFloat {
    type Output = WideFloat;
    fn sub(self, rhs: WideFloat) -> WideFloat {
        self + (-rhs)
    }
}

impl PartialOrd for WideFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        (*self - *other).mantissa.partial_cmp(&0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ulps(a: f64, b: f64) -> u64 {
        if a == b {
            return 0;
        }
        (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
    }

    #[test]
    fn normalization() {
        let w = WideFloat::from_f64(12.0);
        assert_eq!((w.mantissa(), w.exponent()), (0.75, 4));
        assert_eq!(WideFloat::from_f64(0.0), WideFloat::ZERO);
        let sub = WideFloat::from_f64(f64::MIN_POSITIVE / 8.0);
        assert_eq!(sub.mantissa(), 0.5);
        assert_eq!(sub.exponent(), -1024);
        assert_eq!(sub.to_f64(), f64::MIN_POSITIVE / 8.0);
    }

    #[test]
    fn range_beyond_f64() {
        let tiny = WideFloat::from_parts(0.5, -5000);
        let huge = WideFloat::from_parts(0.5, 5000);
        assert_eq!(tiny.to_f64(), 0.0);
        assert_eq!(huge.to_f64(), f64::INFINITY);
        let back = tiny * huge;
        assert_eq!(back.to_f64(), 0.25);
        assert!((tiny.log2_abs() + 5001.0).abs() < 1e-12);
        assert_eq!(WideFloat::from_parts(0.5, -1073).to_f64(), 5e-324);
    }

    #[test]
    fn sqrt_and_powi() {
        assert_eq!(WideFloat::from_f64(16.0).sqrt().to_f64(), 4.0);
        assert_eq!(WideFloat::from_f64(8.0).sqrt().to_f64(), 8f64.sqrt());
        let p = WideFloat::from_f64(0.001).powi(400);
        assert!((p.log2_abs() - 400.0 * 0.001f64.log2()).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn agrees_with_f64_in_range(a in -1e100f64..1e100, b in -1e100f64..1e100) {
            let (wa, wb) = (WideFloat::from_f64(a), WideFloat::from_f64(b));
            prop_assert!(ulps((wa * wb).to_f64(), a * b) <= 1);
            prop_assert!(ulps((wa + wb).to_f64(), a + b) <= 1);
            prop_assert!(ulps((wa - wb).to_f64(), a - b) <= 1);
            if b != 0.0 {
                prop_assert!(ulps((wa / wb).to_f64(), a / b) <= 1);
            }
            prop_assert!(ulps(wa.abs().sqrt().to_f64(), a.abs().sqrt()) <= 1);
        }
    }
}
