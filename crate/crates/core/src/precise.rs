//! Arbitrary-precision fixed-point reals.
//!
//! Values are integers scaled by `2^-bits`. Logarithms use the atanh series
//! after reducing the argument into `[3/4, 3/2)`, and every primitive
//! truncates toward zero, so each result carries an explicit error bound in
//! units of the last place (see [`Fixed::err_ulps`]). Used to certify
//! witness deviations and as an independent oracle in tests.

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

use crate::dd::DoubleDouble;

/// Bits kept beyond the caller's request.
const GUARD_BITS: u32 = 48;

/// A fixed-point real `mant * 2^-bits` together with an error bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fixed {
    mant: BigInt,
    bits: u32,
    /// Upper bound on |value - true value| in units of 2^-bits.
    err_ulps: u128,
}

/// Number of fractional bits needed for `digits` decimal digits.
pub fn bits_for_digits(digits: u32) -> u32 {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32
}

impl Fixed {
    pub fn zero(bits: u32) -> Self {
        Fixed {
            mant: BigInt::zero(),
            bits,
            err_ulps: 0,
        }
    }

    pub fn from_integer(n: i128, bits: u32) -> Self {
        Fixed {
            mant: BigInt::from(n) << bits,
            bits,
            err_ulps: 0,
        }
    }

    /// Exact conversion of a finite double (requires `bits` >= the exponent
    /// deficit of `x`, which holds for every double of magnitude >= 2^-bits+53).
    pub fn from_f64(x: f64, bits: u32) -> Self {
        assert!(x.is_finite());
        if x == 0.0 {
            return Fixed::zero(bits);
        }
        let raw = x.abs().to_bits();
        let exp = ((raw >> 52) & 0x7ff) as i64;
        let (m, e) = if exp == 0 {
            (raw & ((1u64 << 52) - 1), -1074i64)
        } else {
            ((raw & ((1u64 << 52) - 1)) | (1u64 << 52), exp - 1075)
        };
        let shift = e + bits as i64;
        let mut mant = BigInt::from(m);
        let mut err = 0;
        if shift >= 0 {
            mant <<= shift as usize;
        } else {
            mant >>= (-shift) as usize;
            err = 1;
        }
        if x < 0.0 {
            mant = -mant;
        }
        Fixed {
            mant,
            bits,
            err_ulps: err,
        }
    }

    /// Exact conversion of a double-double.
    pub fn from_dd(x: DoubleDouble, bits: u32) -> Self {
        Fixed::from_f64(x.hi, bits).add(&Fixed::from_f64(x.lo, bits))
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn err_ulps(&self) -> u128 {
        self.err_ulps
    }

    /// Error bound as an ordinary double.
    pub fn err_bound(&self) -> f64 {
        self.err_ulps as f64 * 2f64.powi(-(self.bits as i32))
    }

    pub fn add(&self, other: &Fixed) -> Fixed {
        assert_eq!(self.bits, other.bits);
        Fixed {
            mant: &self.mant + &other.mant,
            bits: self.bits,
            err_ulps: self.err_ulps + other.err_ulps,
        }
    }

    pub fn sub(&self, other: &Fixed) -> Fixed {
        assert_eq!(self.bits, other.bits);
        Fixed {
            mant: &self.mant - &other.mant,
            bits: self.bits,
            err_ulps: self.err_ulps + other.err_ulps,
        }
    }

    pub fn abs(&self) -> Fixed {
        Fixed {
            mant: self.mant.abs(),
            ..self.clone()
        }
    }

    pub fn is_negative(&self) -> bool {
        self.mant.sign() == Sign::Minus
    }

    /// Multiplication by an exact integer.
    pub fn mul_int(&self, k: i64) -> Fixed {
        Fixed {
            mant: &self.mant * k,
            bits: self.bits,
            err_ulps: self.err_ulps * k.unsigned_abs() as u128,
        }
    }

    /// Product of two fixed-point values, truncated.
    pub fn mul(&self, other: &Fixed) -> Fixed {
        assert_eq!(self.bits, other.bits);
        let mant = (&self.mant * &other.mant) >> self.bits;
        // |a b - a' b'| <= |a| eb + |b| ea + ea eb, plus one ulp truncation
        let a = self.mant.abs().to_f64().unwrap_or(f64::MAX) * 2f64.powi(-(self.bits as i32));
        let b = other.mant.abs().to_f64().unwrap_or(f64::MAX) * 2f64.powi(-(self.bits as i32));
        let err = (a + 1.0) * other.err_ulps as f64 + (b + 1.0) * self.err_ulps as f64 + 2.0;
        Fixed {
            mant,
            bits: self.bits,
            err_ulps: err.ceil().min(u128::MAX as f64) as u128,
        }
    }

    /// Drops to a coarser scale, truncating (adds one ulp of the new scale).
    pub fn with_bits(&self, bits: u32) -> Fixed {
        if bits >= self.bits {
            let sh = bits - self.bits;
            return Fixed {
                mant: &self.mant << sh,
                bits,
                err_ulps: self.err_ulps << sh,
            };
        }
        let sh = self.bits - bits;
        Fixed {
            mant: &self.mant >> sh,
            bits,
            err_ulps: (self.err_ulps >> sh) + 2,
        }
    }

    pub fn to_f64(&self) -> f64 {
        // go through a 64-bit-significand integer to avoid overflow in to_f64
        let shift = self.mant.bits().saturating_sub(64);
        let top = (&self.mant >> shift).to_f64().unwrap_or(0.0);
        top * 2f64.powi(shift as i32 - self.bits as i32)
    }

    /// Decimal rendering with exactly `frac_digits` digits after the point,
    /// rounded to nearest.
    pub fn to_decimal(&self, frac_digits: u32) -> String {
        let neg = self.is_negative();
        let half = if self.bits > 0 { BigInt::one() << (self.bits - 1) } else { BigInt::zero() };
        let scaled = (self.mant.abs() * BigInt::from(10u32).pow(frac_digits) + half) >> self.bits;
        let mut s = scaled.to_str_radix(10);
        let fd = frac_digits as usize;
        if s.len() <= fd {
            s = "0".repeat(fd + 1 - s.len()) + &s;
        }
        let (int_part, frac_part) = s.split_at(s.len() - fd);
        let mut out = String::new();
        if neg && scaled_nonzero(&s) {
            out.push('-');
        }
        out.push_str(int_part);
        if fd > 0 {
            out.push('.');
            out.push_str(frac_part);
        }
        out
    }

    /// Nearest integer below `self`.
    pub fn floor_int(&self) -> BigInt {
        // arithmetic shift on BigInt rounds toward negative infinity
        &self.mant >> self.bits
    }

    /// Fractional part in `[0, 1)`.
    pub fn frac(&self) -> Fixed {
        let whole = self.floor_int() << self.bits;
        Fixed {
            mant: &self.mant - whole,
            bits: self.bits,
            err_ulps: self.err_ulps,
        }
    }
}

fn scaled_nonzero(s: &str) -> bool {
    s.bytes().any(|b| b != b'0')
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = (self.bits as f64 / std::f64::consts::LOG2_10).floor() as u32;
        f.write_str(&self.to_decimal(digits))
    }
}

/// `2 * atanh(num/den)` at scale `2^-w`, for `|num/den| <= 1/3`.
fn atanh2(num: i128, den: i128, w: u32) -> (BigInt, u128) {
    let z = (BigInt::from(num) << w) / BigInt::from(den);
    let z2 = (&z * &z) >> w;
    let mut power = z.clone();
    let mut sum = BigInt::zero();
    let mut k: u64 = 0;
    let mut err: u128 = 1;
    loop {
        let term = &power / BigInt::from(2 * k + 1);
        if term.is_zero() {
            break;
        }
        sum += term;
        power = (&power * &z2) >> w;
        k += 1;
        err += 3;
    }
    // truncated tail of a geometric series with ratio <= 1/9 is below one ulp
    (sum << 1usize, 2 * err + 2)
}

/// `ln 2` to `bits` fractional bits.
pub fn ln2(bits: u32) -> Fixed {
    let w = bits + GUARD_BITS;
    let (m, e) = atanh2(1, 3, w);
    Fixed {
        mant: m,
        bits: w,
        err_ulps: e,
    }
    .with_bits(bits)
}

/// Natural logarithm of a positive integer to `bits` fractional bits.
pub fn ln_u64(n: u64, bits: u32) -> Fixed {
    assert!(n > 0, "logarithm of zero");
    let w = bits + GUARD_BITS;
    if n == 1 {
        return Fixed::zero(bits);
    }
    // n = 2^e * m with m in [3/4, 3/2)
    let mut e = 63 - n.leading_zeros() as i64;
    if (n as u128) * 2 >= 3u128 << e {
        e += 1;
    }
    let pow = 1i128 << e;
    let (series, series_err) = atanh2(n as i128 - pow, n as i128 + pow, w);
    let (l2, l2_err) = atanh2(1, 3, w);
    let mant = series + l2 * BigInt::from(e);
    let err = series_err + l2_err * e.unsigned_abs() as u128;
    Fixed {
        mant,
        bits: w,
        err_ulps: err,
    }
    .with_bits(bits)
}

/// `p * ln p` for a positive integer.
pub fn p_log_p(p: u64, bits: u32) -> Fixed {
    ln_u64(p, bits).mul_int(p as i64)
}

/// `pi` by Machin's formula.
pub fn pi(bits: u32) -> Fixed {
    let w = bits + GUARD_BITS;
    let atan_inv = |x: i64| -> (BigInt, u128) {
        // atan(1/x) = sum (-1)^k / ((2k+1) x^(2k+1))
        let mut power = (BigInt::one() << w) / BigInt::from(x);
        let x2 = BigInt::from(x * x);
        let mut sum = BigInt::zero();
        let mut k: u64 = 0;
        loop {
            let term = &power / BigInt::from(2 * k + 1);
            if term.is_zero() {
                break;
            }
            if k.is_multiple_of(2) {
                sum += term;
            } else {
                sum -= term;
            }
            power /= &x2;
            k += 1;
        }
        (sum, 2 * k as u128 + 2)
    };
    let (a, ea) = atan_inv(5);
    let (b, eb) = atan_inv(239);
    Fixed {
        mant: (a * 16) - (b * 4),
        bits: w,
        err_ulps: 16 * ea + 4 * eb,
    }
    .with_bits(bits)
}

/// `(cos 2 pi t, sin 2 pi t)` for `t` in `[0, 1)`, by Taylor series.
pub fn cos_sin_2pi(t: &Fixed) -> (Fixed, Fixed) {
    let bits = t.bits;
    let w = bits + GUARD_BITS;
    let tw = t.with_bits(w);
    // shift to [-1/2, 1/2) so the series argument is at most pi
    let half = BigInt::one() << (w - 1);
    let mut tm = tw.mant.clone();
    if tm >= half {
        tm -= BigInt::one() << w;
    }
    let two_pi = pi(w).mul_int(2);
    let x = (&two_pi.mant * &tm) >> w;
    let x2 = (&x * &x) >> w;
    let mut c = BigInt::one() << w;
    let mut s = x.clone();
    let mut term_c = BigInt::one() << w;
    let mut term_s = x.clone();
    let mut k: i64 = 1;
    loop {
        term_c = -((&term_c * &x2) >> w) / BigInt::from((2 * k - 1) * (2 * k));
        term_s = -((&term_s * &x2) >> w) / BigInt::from((2 * k) * (2 * k + 1));
        if term_c.is_zero() && term_s.is_zero() {
            break;
        }
        c += &term_c;
        s += &term_s;
        k += 1;
    }
    // argument error (pi and t) is amplified by at most 2 pi; series adds ~3 ulps per term
    let arg_err = 8 * (two_pi.err_ulps + tw.err_ulps + 2);
    let err = arg_err + 4 * k as u128 + 8;
    let mk = |m: BigInt| {
        Fixed {
            mant: m,
            bits: w,
            err_ulps: err,
        }
        .with_bits(bits)
    };
    (mk(c), mk(s))
}
