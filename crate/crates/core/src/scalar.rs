//! Scalar abstraction for rates and bounds, plus exact rational text I/O.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::Rational;

/// Field in which rates, bounds and memory-sharing weights are evaluated.
///
/// Counts and memories are always exact; a `Scalar` only receives them at
/// the end of a computation, so `f64` loses nothing structural.
pub trait Scalar: Num + Clone + PartialOrd + fmt::Debug + fmt::Display + Send + Sync {
    fn from_ratio(num: i128, den: i128) -> Self;

    fn from_rational(value: &Rational) -> Self;

    fn from_count(count: i128) -> Self {
        Self::from_ratio(count, 1)
    }

    fn to_f64(&self) -> f64;
}

impl Scalar for Rational {
    fn from_ratio(num: i128, den: i128) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_rational(value: &Rational) -> Self {
        value.clone()
    }

    fn to_f64(&self) -> f64 {
        ratio_to_f64(self)
    }
}

impl Scalar for f64 {
    fn from_ratio(num: i128, den: i128) -> Self {
        num as f64 / den as f64
    }

    fn from_rational(value: &Rational) -> Self {
        ratio_to_f64(value)
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_ratio(num: i128, den: i128) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn from_rational(value: &Rational) -> Self {
        ratio_to_f64(value) as f32
    }

    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }
}

fn ratio_to_f64(value: &Rational) -> f64 {
    match (value.numer().to_f64(), value.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => f64::NAN,
    }
}

pub(crate) fn larger<T: PartialOrd>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

pub fn ratio(num: i128, den: i128) -> Rational {
    Rational::from_ratio(num, den)
}

pub fn integer(value: i128) -> Rational {
    Rational::from_ratio(value, 1)
}

/// Parses `"3"`, `"3/2"`, `"-1/4"` or a base-10 decimal such as `"1.25"`
/// into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let err = || Error::ParseRational(text.to_string());
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = trimmed.split_once('/') {
        let num = BigInt::from_str_radix(num.trim(), 10).map_err(|_| err())?;
        let den = BigInt::from_str_radix(den.trim(), 10).map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(num, den));
    }
    let (negative, body) = match trimmed.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, trimmed.strip_prefix('+').unwrap_or(trimmed)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(err());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits = format!("{whole}{frac}");
    let numer = BigInt::from_str_radix(&digits, 10).map_err(|_| err())?;
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let value = Rational::new(numer, denom);
    Ok(if negative { -value } else { value })
}

/// `"3/2"`, or `"6"` when the denominator is one.
pub fn format_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Exact decimal rendering with `places` digits, rounding half away from zero.
pub fn format_decimal(value: &Rational, places: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), places);
    let scaled = value.abs() * Rational::from_integer(scale.clone());
    let (q, r) = scaled.numer().div_rem(scaled.denom());
    let twice = r * 2;
    let rounded = if &twice >= scaled.denom() { q + 1 } else { q };
    let (int_part, frac_part) = rounded.div_rem(&scale);
    let sign = if value.is_negative() && !rounded_is_zero(&int_part, &frac_part) {
        "-"
    } else {
        ""
    };
    if places == 0 {
        return format!("{sign}{int_part}");
    }
    let frac = frac_part.to_string();
    format!("{sign}{int_part}.{}{frac}", "0".repeat(places - frac.len()))
}

fn rounded_is_zero(a: &BigInt, b: &BigInt) -> bool {
    a.is_zero() && b.is_zero()
}
