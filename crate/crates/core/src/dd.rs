//! Double-double arithmetic (an unevaluated sum `hi + lo` of two `f64`s,
//! roughly 32 significant digits).
//!
//! Only what the consistency diagnostics need: the four basic operations,
//! `exp`, `ln` and real powers. Error-free transformations follow Dekker and
//! Knuth; the product uses a fused multiply-add.

use std::cmp::Ordering;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub const fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn is_zero(self) -> bool {
        self.hi == 0.0 && self.lo == 0.0
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    pub fn recip(self) -> Self {
        Dd::ONE / self
    }

    pub fn mul_pow2(self, e: i32) -> Self {
        let s = 2f64.powi(e);
        Dd {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    pub fn powi(self, mut n: u32) -> Self {
        let mut base = self;
        let mut acc = Dd::ONE;
        while n > 0 {
            if n & 1 == 1 {
                acc *= base;
            }
            base *= base;
            n >>= 1;
        }
        acc
    }

    /// `e^x`. Argument reduction by `ln 2` and a further factor of 2^10,
    /// then a Taylor series and repeated squaring.
    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2 * k;
        let r = r.mul_pow2(-10);
        // Taylor series of e^r - 1 for |r| < 4e-4
        let mut term = r;
        let mut sum = r;
        for i in 2..=12 {
            term = term * r / (i as f64);
            sum += term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        // (1 + s)^2 - 1 = s (2 + s), keeps the small part exact
        for _ in 0..10 {
            sum = sum * (sum + 2.0);
        }
        let e = sum + 1.0;
        e.mul_pow2(k as i32)
    }

    /// Natural logarithm, by one Newton step on `exp` from the `f64` value.
    pub fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::from_f64(f64::NAN);
        }
        let y = Dd::from_f64(self.hi.ln());
        // y + x e^{-y} - 1, applied twice for full precision
        let y = y + self * (-y).exp() - 1.0;
        y + self * (-y).exp() - 1.0
    }

    pub fn powf(self, p: f64) -> Self {
        if self.is_zero() {
            return if p > 0.0 { Dd::ZERO } else { Dd::from_f64(f64::INFINITY) };
        }
        (self.ln() * p).exp()
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::from_f64(x)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Add<f64> for Dd {
    type Output = Dd;
    fn add(self, b: f64) -> Dd {
        let (s, e) = two_sum(self.hi, b);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Sub<f64> for Dd {
    type Output = Dd;
    fn sub(self, b: f64) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Mul<f64> for Dd {
    type Output = Dd;
    fn mul(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * q1;
        let q2 = r.hi / b.hi;
        let r = r - b * q2;
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + q3
    }
}

impl Div<f64> for Dd {
    type Output = Dd;
    fn div(self, b: f64) -> Dd {
        self / Dd::from_f64(b)
    }
}

impl AddAssign for Dd {
    fn add_assign(&mut self, b: Dd) {
        *self = *self + b;
    }
}

impl SubAssign for Dd {
    fn sub_assign(&mut self, b: Dd) {
        *self = *self - b;
    }
}

impl MulAssign for Dd {
    fn mul_assign(&mut self, b: Dd) {
        *self = *self * b;
    }
}

impl std::iter::Sum for Dd {
    fn sum<I: Iterator<Item = Dd>>(iter: I) -> Dd {
        iter.fold(Dd::ZERO, |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference digits from a 40-digit evaluation
    const EXP_NEG_2_POW_M7: (f64, f64) = (0.992_217_938_260_243_5, -2.819_270_138_171_979_8e-18);

    #[test]
    fn one_third_times_three() {
        let third = Dd::ONE / 3.0;
        let back = third * 3.0;
        assert!((back - 1.0).abs().to_f64() < 1e-31);
    }

    #[test]
    fn exp_matches_reference() {
        let e = Dd::from_f64(-(2f64.powi(-7))).exp();
        let reference = Dd {
            hi: EXP_NEG_2_POW_M7.0,
            lo: EXP_NEG_2_POW_M7.1,
        };
        assert!((e - reference).abs().to_f64() < 1e-30);
    }

    #[test]
    fn ln_inverts_exp() {
        for &x in &[1e-6, 0.0077, 0.3, 1.0, 2.5, 1e5] {
            let d = Dd::from_f64(x);
            let back = d.ln().exp();
            assert!(((back - d) / d).abs().to_f64() < 1e-30, "x = {x}");
        }
    }

    #[test]
    fn ln_of_point_three() {
        // ln(0.3) = -1.203972804325935992622746217761838...; 0.3 is not exact in binary,
        // so compare against the f64 value plus its first-order correction.
        let l = Dd::from_f64(0.3).ln();
        assert!((l.to_f64() - 0.3f64.ln()).abs() < 1e-16);
    }

    #[test]
    fn sqrt_via_powf() {
        let z = Dd::from_f64(2.0).powf(0.5);
        let sq = z * z;
        assert!((sq - 2.0).abs().to_f64() < 1e-30);
    }
}
