//! Coefficient backends.
//!
//! Every polynomial, matrix and moment computation is generic over [`Scalar`].
//! Three backends exist: exact rationals ([`Rational`]), real floats (`f64`)
//! and complex floats ([`C64`]). A single polynomial never mixes backends;
//! conversions between them are explicit.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;
pub type C64 = Complex64;

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Whether arithmetic in this backend is exact.
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;

    fn conj(&self) -> Self;

    /// Absolute value as a float; used for pivoting and tolerances.
    fn magnitude(&self) -> f64;

    fn to_c64(&self) -> C64;

    /// Square root when it exists in the backend (perfect squares for rationals).
    fn try_sqrt(&self) -> Option<Self>;

    /// Sign and magnitude text for polynomial rendering. Complex values are
    /// never reported negative and render parenthesized.
    fn signed_text(&self) -> (bool, String);

    /// JSON `(re, im)` parts; rationals serialize as `"p/q"` strings.
    fn to_json_parts(&self) -> (JsonNumber, JsonNumber);

    fn from_json_parts(re: &JsonNumber, im: &JsonNumber) -> Result<Self>;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    fn to_text(&self) -> String {
        match self.signed_text() {
            (true, t) => format!("-{t}"),
            (false, t) => t,
        }
    }
}

/// A JSON number that is either a float or an exact `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonNumber {
    Float(f64),
    Exact(String),
}

impl Default for JsonNumber {
    fn default() -> Self {
        JsonNumber::Float(0.0)
    }
}

impl JsonNumber {
    pub fn to_f64(&self) -> Result<f64> {
        match self {
            JsonNumber::Float(v) => Ok(*v),
            JsonNumber::Exact(s) => parse_rational(s).map(|r| rational_to_f64(&r)),
        }
    }

    pub fn to_rational(&self) -> Result<Rational> {
        match self {
            JsonNumber::Float(v) => integral_f64_to_rational(*v).ok_or_else(|| {
                Error::schema(
                    v.to_string(),
                    "non-integer JSON number is inexact; write it as a \"p/q\" string",
                )
            }),
            JsonNumber::Exact(s) => parse_rational(s),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            JsonNumber::Float(v) => *v == 0.0,
            JsonNumber::Exact(s) => parse_rational(s).is_ok_and(|r| r.is_zero()),
        }
    }
}

fn format_f64(v: f64) -> String {
    format!("{v}")
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn conj(&self) -> Self {
        self.clone()
    }

    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }

    fn to_c64(&self) -> C64 {
        C64::new(self.to_f64().unwrap_or(f64::NAN), 0.0)
    }

    fn signed_text(&self) -> (bool, String) {
        (self.is_negative(), format_rational(&self.abs()))
    }

    fn to_json_parts(&self) -> (JsonNumber, JsonNumber) {
        (JsonNumber::Exact(format_rational(self)), JsonNumber::Float(0.0))
    }

    fn from_json_parts(re: &JsonNumber, im: &JsonNumber) -> Result<Self> {
        if !im.is_zero() {
            return Err(Error::schema("im", "imaginary part in a rational polynomial"));
        }
        re.to_rational()
    }

    fn try_sqrt(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let num = self.numer();
        let den = self.denom();
        let rn = num.sqrt();
        let rd = den.sqrt();
        if &(&rn * &rn) == num && &(&rd * &rd) == den {
            Some(Rational::new(rn, rd))
        } else {
            None
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn conj(&self) -> Self {
        *self
    }

    fn magnitude(&self) -> f64 {
        self.abs()
    }

    fn to_c64(&self) -> C64 {
        C64::new(*self, 0.0)
    }

    fn try_sqrt(&self) -> Option<Self> {
        (*self >= 0.0).then(|| self.sqrt())
    }

    fn signed_text(&self) -> (bool, String) {
        (self.is_sign_negative() && *self != 0.0, format_f64(self.abs()))
    }

    fn to_json_parts(&self) -> (JsonNumber, JsonNumber) {
        (JsonNumber::Float(*self), JsonNumber::Float(0.0))
    }

    fn from_json_parts(re: &JsonNumber, im: &JsonNumber) -> Result<Self> {
        if !im.is_zero() {
            return Err(Error::schema("im", "imaginary part in a real polynomial"));
        }
        re.to_f64()
    }
}

impl Scalar for C64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        C64::new(v as f64, 0.0)
    }

    fn conj(&self) -> Self {
        Complex64::conj(self)
    }

    fn magnitude(&self) -> f64 {
        self.norm()
    }

    fn to_c64(&self) -> C64 {
        *self
    }

    fn try_sqrt(&self) -> Option<Self> {
        Some(self.sqrt())
    }

    fn signed_text(&self) -> (bool, String) {
        if self.im == 0.0 {
            return self.re.signed_text();
        }
        let sign = if self.im.is_sign_negative() { '-' } else { '+' };
        (
            false,
            format!("({}{}{}i)", format_f64(self.re), sign, format_f64(self.im.abs())),
        )
    }

    fn to_json_parts(&self) -> (JsonNumber, JsonNumber) {
        (JsonNumber::Float(self.re), JsonNumber::Float(self.im))
    }

    fn from_json_parts(re: &JsonNumber, im: &JsonNumber) -> Result<Self> {
        Ok(C64::new(re.to_f64()?, im.to_f64()?))
    }
}

/// Backends that can be built from real floating point data.
pub trait FloatScalar: Scalar {
    fn from_f64(v: f64) -> Self;
}

impl FloatScalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
}

impl FloatScalar for C64 {
    fn from_f64(v: f64) -> Self {
        C64::new(v, 0.0)
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Canonical text form of a rational: `"p/q"`, or `"p"` for integers.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"p/q"`, integers, and finite decimals such as `"-0.125"` or `"2.5e-3"` exactly.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::schema(format!("{s:?}"), "not a rational number");
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::schema(format!("{s:?}"), "zero denominator"));
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = s[i + 1..].parse().map_err(|_| bad())?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let magnitude = BigInt::parse_bytes(all_digits.as_bytes(), 10).ok_or_else(bad)?;
    let numer = if negative { -magnitude } else { magnitude };
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u8);
    let r = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(r)
}

/// Exact rational value of a finite float, if it is an integer; `None` otherwise.
pub fn integral_f64_to_rational(v: f64) -> Option<Rational> {
    if v.is_finite() && v.fract() == 0.0 && v.abs() < 9.0e15 {
        Some(Rational::from_integer(BigInt::from(v as i64)))
    } else {
        None
    }
}
