//! Double-double arithmetic.
//!
//! A value is held as an unevaluated sum `hi + lo` of two doubles with
//! `|lo| <= ulp(hi) / 2`, giving roughly 106 bits (about 32 decimal digits)
//! of significand. Only the handful of operations needed for phase values
//! `p log p` and for argument reduction of `alpha * p log p` are provided.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

/// Unit roundoff of the double-double format, 2^-104.
pub const DD_EPS: f64 = 4.930380657631324e-32;

/// Unit roundoff of IEEE double, 2^-53.
pub const F64_UNIT: f64 = f64::EPSILON / 2.0;

#[inline(always)]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline(always)]
pub fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

#[inline(always)]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

const LN2: DoubleDouble = DoubleDouble {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };
    pub const ONE: DoubleDouble = DoubleDouble { hi: 1.0, lo: 0.0 };

    #[inline]
    pub const fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    /// Builds a normalized value from an arbitrary pair of doubles.
    #[inline]
    pub fn from_parts(hi: f64, lo: f64) -> Self {
        let (h, l) = two_sum(hi, lo);
        DoubleDouble { hi: h, lo: l }
    }

    /// Exact conversion for every `u64` (values above 2^53 are split).
    pub fn from_u64(n: u64) -> Self {
        let hi = (n >> 32) as f64 * 4_294_967_296.0;
        let lo = (n & 0xffff_ffff) as f64;
        Self::from_parts(hi, lo)
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn is_negative(self) -> bool {
        self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0)
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = self.lo.mul_add(b, e);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }

    pub fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let (p, pe) = two_prod(q1, b);
        let (s, se) = two_sum(self.hi, -p);
        let q2 = (s + (se - pe + self.lo)) / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo }
    }

    /// Multiplies by `2^k` exactly.
    #[inline]
    pub fn ldexp(self, k: i32) -> Self {
        let f = 2f64.powi(k);
        DoubleDouble {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    /// Nearest integer (ties away from zero on the leading word).
    pub fn round(self) -> Self {
        let hi = self.hi.round();
        if hi == self.hi {
            // hi already integral; the fractional information lives in lo.
            let lo = self.lo.round();
            let (h, l) = quick_two_sum(hi, lo);
            let r = DoubleDouble { hi: h, lo: l };
            // lo rounding can straddle a half when hi is integral; fix up.
            let d = (self - r).to_f64();
            if d > 0.5 {
                r + DoubleDouble::ONE
            } else if d < -0.5 {
                r - DoubleDouble::ONE
            } else {
                r
            }
        } else if (hi - self.hi).abs() == 0.5 {
            // exact tie on hi: lo decides the direction
            if self.lo > 0.0 && hi < self.hi {
                DoubleDouble::from_f64(hi + 1.0)
            } else if self.lo < 0.0 && hi > self.hi {
                DoubleDouble::from_f64(hi - 1.0)
            } else {
                DoubleDouble::from_f64(hi)
            }
        } else {
            DoubleDouble::from_f64(hi)
        }
    }

    /// `exp(self)` to about 30 significant digits.
    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return DoubleDouble::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return DoubleDouble::ZERO;
        }
        let m = (self.hi / LN2.hi).round();
        // r = (x - m ln2) / 2^10, |r| <= 3.4e-4
        let r = (self - LN2.mul_f64(m)).ldexp(-10);
        // expm1(r) by Horner on sum r^i / i!
        let mut t = DoubleDouble::ONE;
        for i in (2..=14).rev() {
            t = DoubleDouble::ONE + (t * r).div_f64(i as f64);
        }
        let mut s = t * r;
        // (1 + s)^2 - 1 = 2s + s^2, repeated undoes the 2^-10 scaling
        for _ in 0..10 {
            s = s.ldexp(1) + s * s;
        }
        (s + DoubleDouble::ONE).ldexp(m as i32)
    }

    /// Natural logarithm of a positive value, one Newton step on `exp`.
    pub fn ln(self) -> Self {
        debug_assert!(self.hi > 0.0);
        let y0 = DoubleDouble::from_f64(self.hi.ln());
        y0 + self * (-y0).exp() - DoubleDouble::ONE
    }

    /// Total order compatible with the represented real value.
    #[inline]
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.hi
            .total_cmp(&other.hi)
            .then_with(|| self.lo.total_cmp(&other.lo))
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        DoubleDouble::from_f64(x)
    }
}

impl Add for DoubleDouble {
    type Output = DoubleDouble;
    #[inline]
    fn add(self, b: DoubleDouble) -> DoubleDouble {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }
}

impl Sub for DoubleDouble {
    type Output = DoubleDouble;
    #[inline]
    fn sub(self, b: DoubleDouble) -> DoubleDouble {
        self + (-b)
    }
}

impl Neg for DoubleDouble {
    type Output = DoubleDouble;
    #[inline]
    fn neg(self) -> DoubleDouble {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for DoubleDouble {
    type Output = DoubleDouble;
    #[inline]
    fn mul(self, b: DoubleDouble) -> DoubleDouble {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = self.hi.mul_add(b.lo, e);
        let e = self.lo.mul_add(b.hi, e);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }
}

/// Fractional part of `alpha * v` reduced to `[-1/2, 1/2]`.
///
/// `alpha` is taken as an exact double; the product is formed in
/// double-double so the result is accurate to a few units of 2^-53 in
/// absolute terms regardless of the magnitude of `alpha * v`.
#[inline]
pub fn reduced_phase(alpha: f64, v: DoubleDouble) -> f64 {
    let (p, e) = two_prod(alpha, v.hi);
    let e = e + alpha * v.lo;
    // p - round(p) is exact: both are doubles of the same binade or p is integral
    let f = p - p.round();
    let r = f + e;
    r - r.round()
}

/// Absolute error bound of [`reduced_phase`] for a given product size.
#[inline]
pub fn reduced_phase_error(alpha: f64, v: DoubleDouble) -> f64 {
    // rounding of alpha*lo plus two additions of numbers below ~1.5
    (alpha * v.hi).abs() * DD_EPS * 4.0 + 4.0 * F64_UNIT
}
