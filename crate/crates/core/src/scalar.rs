//! Scalar modes: exact rationals and double-precision floats.
//!
//! Every construction in the crate is generic over [`Scalar`]. Exact mode
//! ([`BigRational`]) never rounds; float mode compares with a relative
//! tolerance of [`FLOAT_REL_TOL`].

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative tolerance for float-mode comparisons.
pub const FLOAT_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => f.write_str("exact"),
            Mode::Float => f.write_str("float"),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            other => Err(Error::Parse(format!("unknown mode {other:?} (expected exact|float)"))),
        }
    }
}

pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialOrd
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + 'static
{
    const MODE: Mode;

    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_int(v: &BigInt) -> Self;

    /// Converts a float. In exact mode the binary value is taken exactly.
    fn from_f64(v: f64) -> Result<Self>;

    fn to_f64(&self) -> f64;

    fn powi(&self, e: u32) -> Self;

    /// `self^p` for real `p >= 0`. Exact mode accepts only integral `p`.
    fn powf(&self, p: f64) -> Result<Self>;

    /// `self <= other` up to the mode tolerance (exact comparison in exact mode).
    fn le_tol(&self, other: &Self) -> bool;

    fn eq_tol(&self, other: &Self) -> bool {
        self.le_tol(other) && other.le_tol(self)
    }

    fn to_value(&self) -> ScalarValue;

    fn from_u64(v: u64) -> Self {
        Self::from_int(&BigInt::from(v))
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

/// Integral exponent check shared by both modes.
pub fn integral_exponent(p: f64) -> Option<u32> {
    if p >= 0.0 && p.fract() == 0.0 && p <= u32::MAX as f64 {
        Some(p as u32)
    } else {
        None
    }
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_int(v: &BigInt) -> Self {
        v.to_f64().unwrap_or(f64::INFINITY)
    }

    fn from_f64(v: f64) -> Result<Self> {
        Ok(v)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn powi(&self, e: u32) -> Self {
        f64::powi(*self, e as i32)
    }

    fn powf(&self, p: f64) -> Result<Self> {
        if p < 0.0 || !p.is_finite() {
            return Err(Error::invalid(format!("exponent {p} must be finite and non-negative")));
        }
        if *self == 0.0 {
            return Ok(if p == 0.0 { 1.0 } else { 0.0 });
        }
        match integral_exponent(p) {
            Some(e) if e <= 64 => Ok(f64::powi(*self, e as i32)),
            _ => Ok(f64::powf(*self, p)),
        }
    }

    fn le_tol(&self, other: &Self) -> bool {
        *self <= *other || (*self - *other) <= FLOAT_REL_TOL * self.abs().max(other.abs())
    }

    fn to_value(&self) -> ScalarValue {
        ScalarValue::Float(*self)
    }
}

impl Scalar for BigRational {
    const MODE: Mode = Mode::Exact;

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_int(v: &BigInt) -> Self {
        BigRational::from_integer(v.clone())
    }

    fn from_f64(v: f64) -> Result<Self> {
        BigRational::from_float(v).ok_or_else(|| Error::Inexact(format!("non-finite value {v}")))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            if self.is_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        })
    }

    fn powi(&self, e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = BigRational::one();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc *= &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    fn powf(&self, p: f64) -> Result<Self> {
        match integral_exponent(p) {
            Some(e) => Ok(Scalar::powi(self, e)),
            None => Err(Error::Inexact(format!("power with non-integral exponent {p}"))),
        }
    }

    fn le_tol(&self, other: &Self) -> bool {
        self <= other
    }

    fn to_value(&self) -> ScalarValue {
        ScalarValue::Exact(self.clone())
    }
}

/// A scalar detached from its arithmetic mode, used in reports.
///
/// Renders as an exact fraction (`"3/4"`) or as a 17-significant-digit
/// decimal; serializes as that string.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarValue {
    Exact(BigRational),
    Float(f64),
}

impl ScalarValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            ScalarValue::Exact(r) => Scalar::to_f64(r),
            ScalarValue::Float(v) => *v,
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            ScalarValue::Exact(_) => Mode::Exact,
            ScalarValue::Float(_) => Mode::Float,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            ScalarValue::Exact(r) => Some(r),
            ScalarValue::Float(_) => None,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.contains(['.', 'e', 'E']) || s.contains("inf") || s.contains("NaN") {
            return s
                .parse::<f64>()
                .map(ScalarValue::Float)
                .map_err(|e| Error::Parse(format!("bad float {s:?}: {e}")));
        }
        let r = match s.split_once('/') {
            Some((n, d)) => {
                let n: BigInt = n.parse().map_err(|_| Error::Parse(format!("bad fraction {s:?}")))?;
                let d: BigInt = d.parse().map_err(|_| Error::Parse(format!("bad fraction {s:?}")))?;
                if d.is_zero() {
                    return Err(Error::Parse(format!("zero denominator in {s:?}")));
                }
                BigRational::new(n, d)
            }
            None => BigRational::from_integer(
                s.parse().map_err(|_| Error::Parse(format!("bad integer {s:?}")))?,
            ),
        };
        Ok(ScalarValue::Exact(r))
    }
}

impl fmt::Display for ScalarValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarValue::Exact(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            ScalarValue::Float(v) => write!(f, "{v:.16e}"),
        }
    }
}

impl Serialize for ScalarValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScalarValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        ScalarValue::parse(&s).map_err(serde::de::Error::custom)
    }
}
