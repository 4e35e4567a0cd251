//! Floating-point values carried with a separate power-of-two exponent.
//!
//! Products of thousands of user factors and sums of `rho^x / x!` terms leave
//! the `f64` range long before the ratios we report do. Both types keep the
//! mantissa near unit magnitude and push the scale into an `i64` exponent.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign};

use num_complex::Complex64;
use serde::{Serialize, Serializer};

/// Exponent gap beyond which the smaller addend cannot affect the sum.
const NEGLIGIBLE_SHIFT: i64 = 1100;

/// `2^e` for `e` in the normal exponent range.
fn pow2(e: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// Exact `x * 2^e`, saturating to zero or infinity.
pub(crate) fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1023 {
        x *= pow2(1023);
        e -= 1023;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1022 {
        x *= pow2(-1022);
        e += 1022;
        if x == 0.0 {
            return x;
        }
    }
    x * pow2(e)
}

/// Splits a finite nonzero `x` into `(f, e)` with `x = f * 2^e`, `|f|` in `[0.5, 1)`.
fn frexp(x: f64) -> (f64, i64) {
    debug_assert!(x.is_finite() && x != 0.0);
    let bits = x.to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i64;
    if raw == 0 {
        // subnormal
        let (f, e) = frexp(x * pow2(64));
        return (f, e - 64);
    }
    let f = f64::from_bits((bits & !(0x7ff << 52)) | (1022 << 52));
    (f, raw - 1022)
}

/// Real value `mantissa * 2^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledReal {
    mantissa: f64,
    exponent: i64,
}

impl ScaledReal {
    pub const ZERO: ScaledReal = ScaledReal {
        mantissa: 0.0,
        exponent: 0,
    };
    pub const ONE: ScaledReal = ScaledReal {
        mantissa: 0.5,
        exponent: 1,
    };

    fn normalized(mantissa: f64, exponent: i64) -> Self {
        assert!(mantissa.is_finite(), "non-finite mantissa {mantissa}");
        if mantissa == 0.0 {
            return Self::ZERO;
        }
        let (f, e) = frexp(mantissa);
        Self {
            mantissa: f,
            exponent: exponent + e,
        }
    }

    pub fn from_f64(x: f64) -> Self {
        Self::normalized(x, 0)
    }

    /// `x * 2^exponent`.
    pub fn from_parts(x: f64, exponent: i64) -> Self {
        Self::normalized(x, exponent)
    }

    pub fn mantissa(self) -> f64 {
        self.mantissa
    }

    pub fn exponent(self) -> i64 {
        self.exponent
    }

    pub fn is_zero(self) -> bool {
        self.mantissa == 0.0
    }

    /// Plain value; overflows to infinity or underflows to zero out of range.
    pub fn to_f64(self) -> f64 {
        ldexp(self.mantissa, self.exponent)
    }

    /// `self / other` as a plain float, the usual way results leave scaled form.
    pub fn ratio(self, other: ScaledReal) -> f64 {
        (self / other).to_f64()
    }

    pub fn ln(self) -> f64 {
        self.mantissa.ln() + self.exponent as f64 * std::f64::consts::LN_2
    }

    pub fn recip(self) -> Self {
        Self::ONE / self
    }

    pub fn powi(self, n: u32) -> Self {
        let mut acc = Self::ONE;
        let mut base = self;
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc *= base;
            }
            base *= base;
            n >>= 1;
        }
        acc
    }

    pub fn abs(self) -> Self {
        Self {
            mantissa: self.mantissa.abs(),
            exponent: self.exponent,
        }
    }
}

impl Default for ScaledReal {
    fn default() -> Self {
        Self::ZERO
    }
}

impl From<f64> for ScaledReal {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl Mul for ScaledReal {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::normalized(self.mantissa * rhs.mantissa, self.exponent + rhs.exponent)
    }
}

impl Mul<f64> for ScaledReal {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self * Self::from_f64(rhs)
    }
}

impl MulAssign for ScaledReal {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl Div for ScaledReal {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        assert!(!rhs.is_zero(), "division of scaled value by zero");
        Self::normalized(self.mantissa / rhs.mantissa, self.exponent - rhs.exponent)
    }
}

impl Add for ScaledReal {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.exponent >= rhs.exponent {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let shift = small.exponent - big.exponent;
        if shift < -NEGLIGIBLE_SHIFT {
            return big;
        }
        Self::normalized(big.mantissa + ldexp(small.mantissa, shift), big.exponent)
    }
}

impl AddAssign for ScaledReal {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for ScaledReal {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, Add::add)
    }
}

impl PartialOrd for ScaledReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let sign = |x: &Self| {
            if x.mantissa > 0.0 {
                1
            } else if x.mantissa < 0.0 {
                -1
            } else {
                0
            }
        };
        let (a, b) = (sign(self), sign(other));
        if a != b || a == 0 {
            return a.partial_cmp(&b);
        }
        let magnitude = self
            .exponent
            .cmp(&other.exponent)
            .then(self.mantissa.abs().total_cmp(&other.mantissa.abs()));
        Some(if a > 0 {
            magnitude
        } else {
            magnitude.reverse()
        })
    }
}

impl fmt::Display for ScaledReal {
    /// Decimal scientific notation, valid far outside the `f64` range.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let precision = f.precision().unwrap_or(15);
        let plain = self.to_f64();
        if self.is_zero() || (plain.is_normal() && plain.abs() > 1e-300 && plain.abs() < 1e300) {
            return write!(f, "{:.*e}", precision, plain);
        }
        let log10 = self.mantissa.abs().log10() + self.exponent as f64 * std::f64::consts::LOG10_2;
        let mut exp10 = log10.floor();
        let mut digits = 10f64.powf(log10 - exp10);
        if digits >= 10.0 {
            digits /= 10.0;
            exp10 += 1.0;
        }
        let sign = if self.mantissa < 0.0 { "-" } else { "" };
        write!(f, "{sign}{:.*}e{}", precision, digits, exp10 as i64)
    }
}

impl Serialize for ScaledReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Complex value `mantissa * 2^exponent` with `|mantissa|` in `[0.5, 2)` or zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledComplex {
    mantissa: Complex64,
    exponent: i64,
}

impl ScaledComplex {
    pub const ZERO: ScaledComplex = ScaledComplex {
        mantissa: Complex64::new(0.0, 0.0),
        exponent: 0,
    };
    pub const ONE: ScaledComplex = ScaledComplex {
        mantissa: Complex64::new(1.0, 0.0),
        exponent: 0,
    };

    fn normalized(mantissa: Complex64, exponent: i64) -> Self {
        assert!(
            mantissa.re.is_finite() && mantissa.im.is_finite(),
            "non-finite mantissa {mantissa}"
        );
        let largest = mantissa.re.abs().max(mantissa.im.abs());
        if largest == 0.0 {
            return Self::ZERO;
        }
        // largest component in [0.5, 1) puts the modulus in [0.5, sqrt 2)
        let (_, e) = frexp(largest);
        Self {
            mantissa: Complex64::new(ldexp(mantissa.re, -e), ldexp(mantissa.im, -e)),
            exponent: exponent + e,
        }
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self::normalized(z, 0)
    }

    pub fn mantissa(self) -> Complex64 {
        self.mantissa
    }

    pub fn exponent(self) -> i64 {
        self.exponent
    }

    pub fn is_zero(self) -> bool {
        self.mantissa.re == 0.0 && self.mantissa.im == 0.0
    }

    /// Value times `2^-exponent`, as a plain complex number.
    pub fn rescaled(self, exponent: i64) -> Complex64 {
        let shift = self.exponent - exponent;
        Complex64::new(
            ldexp(self.mantissa.re, shift),
            ldexp(self.mantissa.im, shift),
        )
    }

    pub fn to_complex(self) -> Complex64 {
        self.rescaled(0)
    }

    pub fn re(self) -> ScaledReal {
        ScaledReal::from_parts(self.mantissa.re, self.exponent)
    }

    pub fn im(self) -> ScaledReal {
        ScaledReal::from_parts(self.mantissa.im, self.exponent)
    }

    pub fn norm(self) -> ScaledReal {
        ScaledReal::from_parts(self.mantissa.norm(), self.exponent)
    }
}

impl From<Complex64> for ScaledComplex {
    fn from(z: Complex64) -> Self {
        Self::from_complex(z)
    }
}

impl Mul for ScaledComplex {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::normalized(self.mantissa * rhs.mantissa, self.exponent + rhs.exponent)
    }
}

impl Mul<Complex64> for ScaledComplex {
    type Output = Self;
    fn mul(self, rhs: Complex64) -> Self {
        Self::normalized(self.mantissa * rhs, self.exponent)
    }
}

impl MulAssign<Complex64> for ScaledComplex {
    fn mul_assign(&mut self, rhs: Complex64) {
        *self = *self * rhs;
    }
}

impl Add for ScaledComplex {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.exponent >= rhs.exponent {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let shift = small.exponent - big.exponent;
        if shift < -NEGLIGIBLE_SHIFT {
            return big;
        }
        Self::normalized(big.mantissa + small.rescaled(big.exponent), big.exponent)
    }
}

impl AddAssign for ScaledComplex {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}
