//! Exact time arithmetic in minutes.
//!
//! All durations in the solver are `Minutes`, a thin wrapper over a
//! rational number. Truck legs derived from coordinates are rationals
//! (distance over speed), drone mission durations are integers, and every
//! sum, max and comparison the solvers perform stays exact. Two schedules
//! with equal makespan compare equal, with no epsilon anywhere.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::de;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A duration (or time point) in minutes, exact.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Minutes(Ratio<i64>);

impl Minutes {
    pub const ZERO: Minutes = Minutes(Ratio::new_raw(0, 1));

    pub fn from_int(v: i64) -> Minutes {
        Minutes(Ratio::from_integer(v))
    }

    /// Exact conversion from a finite `f64`. Every finite float is a dyadic
    /// rational; `None` if it does not fit in an `i64` ratio (huge magnitude
    /// or a denominator beyond 2^53, which no sane input file produces).
    pub fn from_f64(v: f64) -> Option<Minutes> {
        dyadic(v).map(Minutes)
    }

    pub fn ratio(num: i64, den: i64) -> Minutes {
        Minutes(Ratio::new(num, den))
    }

    pub(crate) fn from_ratio(r: Ratio<i64>) -> Minutes {
        Minutes(r)
    }

    pub fn as_f64(self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_integer(self) -> bool {
        self.0.is_integer()
    }

    pub fn is_zero(self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(self) -> bool {
        self.0.is_negative()
    }

    /// Integer value if the duration is a whole number of minutes.
    pub fn to_int(self) -> Option<i64> {
        self.is_integer().then(|| self.0.to_integer())
    }

    /// Smallest integer number of minutes `>= self`.
    pub fn ceil(self) -> Minutes {
        Minutes(self.0.ceil())
    }

    /// Round half away from zero to a whole number of minutes.
    pub fn round_half_up(self) -> Minutes {
        Minutes(self.0.round())
    }

    pub fn min(self, other: Minutes) -> Minutes {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Minutes) -> Minutes {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn abs(self) -> Minutes {
        Minutes(self.0.abs())
    }
}

/// Exact rational value of a finite float: mantissa times a power of two.
pub(crate) fn dyadic(v: f64) -> Option<Ratio<i64>> {
    if !v.is_finite() {
        return None;
    }
    let mut num = v;
    let mut den: i64 = 1;
    while num.fract() != 0.0 {
        num *= 2.0;
        den = den.checked_mul(2)?;
    }
    if num.abs() > i64::MAX as f64 {
        return None;
    }
    Some(Ratio::new(num as i64, den))
}

impl fmt::Display for Minutes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.to_integer())
        } else {
            write!(f, "{}", self.as_f64())
        }
    }
}

impl fmt::Debug for Minutes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}min", self)
    }
}

impl Add for Minutes {
    type Output = Minutes;
    fn add(self, rhs: Minutes) -> Minutes {
        Minutes(self.0 + rhs.0)
    }
}

impl AddAssign for Minutes {
    fn add_assign(&mut self, rhs: Minutes) {
        self.0 += rhs.0;
    }
}

impl Sub for Minutes {
    type Output = Minutes;
    fn sub(self, rhs: Minutes) -> Minutes {
        Minutes(self.0 - rhs.0)
    }
}

impl SubAssign for Minutes {
    fn sub_assign(&mut self, rhs: Minutes) {
        self.0 -= rhs.0;
    }
}

impl Neg for Minutes {
    type Output = Minutes;
    fn neg(self) -> Minutes {
        Minutes(-self.0)
    }
}

impl Mul<i64> for Minutes {
    type Output = Minutes;
    fn mul(self, rhs: i64) -> Minutes {
        Minutes(self.0 * Ratio::from_integer(rhs))
    }
}

impl Div<i64> for Minutes {
    type Output = Minutes;
    fn div(self, rhs: i64) -> Minutes {
        Minutes(self.0 / Ratio::from_integer(rhs))
    }
}

impl Sum for Minutes {
    fn sum<I: Iterator<Item = Minutes>>(iter: I) -> Minutes {
        iter.fold(Minutes::ZERO, |a, b| a + b)
    }
}

impl From<i64> for Minutes {
    fn from(v: i64) -> Minutes {
        Minutes::from_int(v)
    }
}

impl Serialize for Minutes {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self.to_int() {
            Some(v) => serializer.serialize_i64(v),
            None => serializer.serialize_f64(self.as_f64()),
        }
    }
}

impl<'de> Deserialize<'de> for Minutes {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = Minutes;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number of minutes")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Minutes, E> {
                Ok(Minutes::from_int(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Minutes, E> {
                i64::try_from(v)
                    .map(Minutes::from_int)
                    .map_err(|_| E::custom("time value out of range"))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Minutes, E> {
                Minutes::from_f64(v).ok_or_else(|| E::custom("time value not representable"))
            }
        }
        deserializer.deserialize_any(V)
    }
}
