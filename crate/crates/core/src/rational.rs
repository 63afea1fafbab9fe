//! Exact rational coordinates and half-open intervals on the real line.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Denominator exponent used when snapping floating point samples.
pub const DYADIC_BITS: u32 = 53;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("malformed rational literal `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// A rational number kept in lowest terms with a positive denominator.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Rational(Ratio<i128>);

impl Rational {
    pub const ZERO: Rational = Rational(Ratio::new_raw(0, 1));
    pub const ONE: Rational = Rational(Ratio::new_raw(1, 1));

    /// Panics on a zero denominator.
    pub fn new(numer: i128, denom: i128) -> Self {
        Rational(Ratio::new(numer, denom))
    }

    pub fn integer(n: i128) -> Self {
        Rational(Ratio::from_integer(n))
    }

    pub fn numer(&self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i128 {
        *self.0.denom()
    }

    /// `3^(-e)`.
    pub fn inverse_power_of_three(e: u32) -> Self {
        Rational::new(1, 3i128.pow(e))
    }

    /// Exact conversion of `x` rounded to the nearest multiple of `2^-53`.
    ///
    /// Returns `None` for non-finite input or magnitudes that do not fit.
    pub fn from_f64_dyadic(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        let scaled = (x * (1u64 << DYADIC_BITS) as f64).round();
        if scaled.abs() >= 1e36 {
            return None;
        }
        Some(Rational::new(scaled as i128, 1i128 << DYADIC_BITS))
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    pub fn floor(&self) -> i128 {
        Integer::div_floor(&self.numer(), &self.denom())
    }

    /// `floor(self / width)` for a positive `width`.
    pub fn floor_div(&self, width: Rational) -> i128 {
        debug_assert!(width.is_positive());
        (self.0 / width.0).floor().to_integer()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }
}

impl Add for Rational {
    type Output = Rational;
    fn add(self, rhs: Rational) -> Rational {
        Rational(self.0 + rhs.0)
    }
}

impl Sub for Rational {
    type Output = Rational;
    fn sub(self, rhs: Rational) -> Rational {
        Rational(self.0 - rhs.0)
    }
}

impl Mul for Rational {
    type Output = Rational;
    fn mul(self, rhs: Rational) -> Rational {
        Rational(self.0 * rhs.0)
    }
}

impl Mul<i128> for Rational {
    type Output = Rational;
    fn mul(self, rhs: i128) -> Rational {
        Rational(self.0 * rhs)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::integer(n as i128)
    }
}

/// Canonical `p/q` form, always with the denominator.
impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || ParseRationalError::Malformed(s.to_string());
        let (p, q) = match s.trim().split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None => (s.trim(), "1"),
        };
        let p: i128 = p.parse().map_err(|_| malformed())?;
        let q: i128 = q.parse().map_err(|_| malformed())?;
        if q == 0 {
            return Err(ParseRationalError::ZeroDenominator(s.to_string()));
        }
        Ok(Rational::new(p, q))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Half-open interval `[lo, hi)` with `lo < hi`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

impl Interval {
    /// Returns `None` unless `lo < hi`.
    pub fn new(lo: Rational, hi: Rational) -> Option<Self> {
        (lo < hi).then_some(Interval { lo, hi })
    }

    pub fn with_width(lo: Rational, width: Rational) -> Self {
        Interval::new(lo, lo + width).expect("interval width must be positive")
    }

    pub fn lo(&self) -> Rational {
        self.lo
    }

    pub fn hi(&self) -> Rational {
        self.hi
    }

    pub fn width(&self) -> Rational {
        self.hi - self.lo
    }

    pub fn contains(&self, x: Rational) -> bool {
        self.lo <= x && x < self.hi
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }

    /// Splits into three consecutive pieces of equal width.
    pub fn thirds(&self) -> [Interval; 3] {
        let w = self.width() * Rational::new(1, 3);
        let a = self.lo;
        [
            Interval::with_width(a, w),
            Interval::with_width(a + w, w),
            Interval::with_width(a + w + w, w),
        ]
    }

    /// Orders by left endpoint, then right endpoint.
    pub fn cmp_lo(&self, other: &Interval) -> Ordering {
        self.lo.cmp(&other.lo).then(self.hi.cmp(&other.hi))
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [self.lo, self.hi].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [lo, hi] = <[Rational; 2]>::deserialize(deserializer)?;
        Interval::new(lo, hi).ok_or_else(|| serde::de::Error::custom("interval with lo >= hi"))
    }
}

/// Checks that `pieces` tile `[lo, hi)` exactly, with no gaps or overlaps.
pub fn tiles_exactly(pieces: &[Interval], lo: Rational, hi: Rational) -> bool {
    let mut sorted: Vec<Interval> = pieces.to_vec();
    sorted.sort_by(Interval::cmp_lo);
    let mut cursor = lo;
    for piece in &sorted {
        if piece.lo != cursor {
            return false;
        }
        cursor = piece.hi;
    }
    cursor == hi
}
