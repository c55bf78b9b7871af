//! Exact rationals for weights, thresholds, scores and coverage.
//!
//! Everything that the model describes as "a rational in [0,1]" is a
//! [`Proportion`]. Values are exact, so `0.9 × 0.8` is `0.72` and not
//! `0.7200000000000001`, and reports stay byte-reproducible.

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RatioError {
    #[error("InvalidNumber: {0:?} is not a decimal or fraction")]
    InvalidNumber(String),
    #[error("OutOfRange: {0} is outside [0, 1]")]
    OutOfRange(String),
}

/// Parses `"3"`, `"-0.25"`, `"0.995"` or `"7/8"` into an exact rational.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let s = text.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    if negative {
        num = -num;
    }
    let den = BigInt::from(10u32).pow(frac_part.len() as u32);
    Some(BigRational::new(num, den))
}

/// Renders a rational as a terminating decimal when one exists, else `p/q`.
pub fn format_rational(value: &BigRational) -> String {
    let value = value.reduced();
    let mut den = value.denom().clone();
    let (two, five) = (BigInt::from(2u32), BigInt::from(5u32));
    let (mut twos, mut fives) = (0u32, 0u32);
    while den.is_even() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format!("{}/{}", value.numer(), value.denom());
    }
    let places = twos.max(fives);
    let scaled = value.numer() * BigInt::from(10u32).pow(places) / value.denom();
    if places == 0 {
        return scaled.to_string();
    }
    let negative = scaled.is_negative();
    let digits = scaled.abs().to_string();
    let places = places as usize;
    let padded = if digits.len() <= places {
        format!("{}{}", "0".repeat(places + 1 - digits.len()), digits)
    } else {
        digits
    };
    let (int_part, frac_part) = padded.split_at(padded.len() - places);
    format!("{}{}.{}", if negative { "-" } else { "" }, int_part, frac_part)
}

/// A rational number known to lie in the closed unit interval.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Proportion(BigRational);

impl Proportion {
    pub fn new(value: BigRational) -> Result<Self, RatioError> {
        if value.is_negative() || value > BigRational::one() {
            return Err(RatioError::OutOfRange(format_rational(&value)));
        }
        Ok(Self(value.reduced()))
    }

    pub fn from_fraction(numer: u64, denom: u64) -> Result<Self, RatioError> {
        if denom == 0 {
            return Err(RatioError::InvalidNumber(format!("{numer}/{denom}")));
        }
        Self::new(BigRational::new(numer.into(), denom.into()))
    }

    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    pub fn one() -> Self {
        Self(BigRational::one())
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// `1 - self`.
    pub fn complement(&self) -> Self {
        Self(BigRational::one() - &self.0)
    }
}

impl Mul for &Proportion {
    type Output = Proportion;

    fn mul(self, rhs: &Proportion) -> Proportion {
        Proportion(&self.0 * &rhs.0)
    }
}

impl Mul for Proportion {
    type Output = Proportion;

    fn mul(self, rhs: Proportion) -> Proportion {
        &self * &rhs
    }
}

impl FromStr for Proportion {
    type Err = RatioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let value = parse_decimal(s).ok_or_else(|| RatioError::InvalidNumber(s.to_string()))?;
        Self::new(value)
    }
}

impl fmt::Display for Proportion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl Serialize for Proportion {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Proportion {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
