//! Scalar abstraction shared by the exact (rational) and floating paths.
//!
//! Identity checks run over [`Rat`]; sampled grid computations run over
//! `f64`. Symbolic frame computations run over [`crate::poly::Poly`], which
//! is a [`Ring`] but not a [`Field`].

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

/// Exact rational number.
pub type Rat = num_rational::BigRational;

/// Commutative ring with unit, cloned freely.
pub trait Ring:
    Clone + PartialEq + fmt::Debug + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn from_rational(r: &Rat) -> Self;

    fn from_i64(n: i64) -> Self {
        Self::from_rational(&rat(n))
    }
}

/// Ring with division.
pub trait Field: Ring + Div<Output = Self> {
    /// `true` when arithmetic is exact and zero tests need no tolerance.
    const EXACT: bool;

    /// Size used for pivot selection and tolerance tests.
    fn magnitude(&self) -> f64;
}

impl Ring for f64 {
    fn from_rational(r: &Rat) -> Self {
        rat_to_f64(r)
    }

    fn from_i64(n: i64) -> Self {
        n as f64
    }
}

impl Field for f64 {
    const EXACT: bool = false;

    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Ring for Rat {
    fn from_rational(r: &Rat) -> Self {
        r.clone()
    }
}

impl Field for Rat {
    const EXACT: bool = true;

    fn magnitude(&self) -> f64 {
        rat_to_f64(&self.abs())
    }
}

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fall back to a quotient of the (possibly huge) parts.
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Parse `"p/q"`, an integer, or a finite decimal such as `"-0.125"` exactly.
pub fn parse_rational(text: &str) -> Result<Rat, Error> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rat::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(if all_digits.is_empty() { "0" } else { &all_digits }).map_err(|_| bad())?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Rat::from_integer(numer);
    if scale >= 0 {
        value *= Rat::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rat::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if negative { -value } else { value })
}

/// Render a rational as `p` or `p/q`.
pub fn format_rational(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Sign of the permutation sorting `seq`, or `None` if it repeats an entry.
pub fn permutation_sign(seq: &[usize]) -> Option<i32> {
    let mut sign = 1;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            match seq[i].cmp(&seq[j]) {
                std::cmp::Ordering::Equal => return None,
                std::cmp::Ordering::Greater => sign = -sign,
                std::cmp::Ordering::Less => {}
            }
        }
    }
    Some(sign)
}

pub fn signed<S: Ring>(value: S, sign: i32) -> S {
    if sign < 0 {
        -value
    } else {
        value
    }
}
