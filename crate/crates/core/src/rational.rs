//! Exact rational numbers and their textual forms.
//!
//! Parsing never goes through binary floating point: decimal strings are
//! converted by place value, so `"0.1"` is exactly `1/10`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact fraction over arbitrary-precision integers, always in lowest terms.
pub type Rational = BigRational;

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn integer<T: Into<BigInt>>(value: T) -> Rational {
    Rational::from_integer(value.into())
}

/// Parses `"p"`, `"p/q"`, or a decimal such as `"-1.25"`.
pub fn parse_rational(input: &str) -> Result<Rational> {
    let s = input.trim();
    let err = |reason: &str| Error::Parse {
        input: input.to_string(),
        reason: reason.to_string(),
    };
    if s.is_empty() {
        return Err(err("empty string"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| err("bad numerator"))?;
        let den: BigInt = den.trim().parse().map_err(|_| err("bad denominator"))?;
        if den.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(Rational::new(num, den));
    }
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err("no digits"));
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err("expected digits"));
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| err("bad digits"))?
    };
    let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let value = Rational::new(numer, denom);
    Ok(if negative { -value } else { value })
}

/// Decimal rendering with `places` fractional digits, rounding half away
/// from zero (half-up on magnitudes).
pub fn to_decimal(value: &Rational, places: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10u32), places);
    let scaled = value.abs() * Rational::from_integer(scale.clone());
    let (q, r) = scaled.numer().div_rem(scaled.denom());
    let twice = r * 2u32;
    let rounded = if &twice >= scaled.denom() { q + 1u32 } else { q };
    let negative = value.is_negative() && !rounded.is_zero();
    let (int_part, frac_part) = rounded.div_rem(&scale);
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    out.push_str(&int_part.to_string());
    if places > 0 {
        let frac = frac_part.to_string();
        out.push('.');
        out.extend(std::iter::repeat_n('0', places - frac.len()));
        out.push_str(&frac);
    }
    out
}

/// `"p/q"`, or just `"p"` for integers.
pub fn to_fraction(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Least common multiple of the reduced denominators.
pub fn common_denominator<'a, I>(values: I) -> BigInt
where
    I: IntoIterator<Item = &'a Rational>,
{
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}
