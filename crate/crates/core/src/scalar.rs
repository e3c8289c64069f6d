//! Number flavors.
//!
//! Every space is complex. Exact data (structure constants, action matrices,
//! cohomology bases) lives in `Complex<BigRational>`; perturbations and the
//! Hyers iteration run in `Complex<f64>`.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact complex rational.
pub type Exact = Complex<BigRational>;
/// Floating complex.
pub type C64 = Complex<f64>;

/// A table of constants kept in both flavors so generic code can borrow the
/// matching one without converting on every access.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    exact: Vec<Exact>,
    float: Vec<C64>,
}

impl Table {
    pub fn new(exact: Vec<Exact>) -> Self {
        let float = exact.iter().map(to_c64).collect();
        Table { exact, float }
    }

    pub fn exact(&self) -> &[Exact] {
        &self.exact
    }

    pub fn float(&self) -> &[C64] {
        &self.float
    }

    pub fn len(&self) -> usize {
        self.exact.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exact.is_empty()
    }
}

/// Arithmetic shared by both flavors.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
{
    /// Borrow the flavor of `table` matching `Self`.
    fn pick(table: &Table) -> &[Self];
    fn from_exact(v: &Exact) -> Self;
    fn from_i64(v: i64) -> Self;
    fn modulus(&self) -> f64;
    fn conj(&self) -> Self;
    fn to_c64(&self) -> C64;
    /// Field division; `None` on a zero divisor.
    fn checked_div(&self, rhs: &Self) -> Option<Self>;
    /// Magnitude used to choose pivots (largest wins for floats; exact code
    /// only needs nonzero).
    fn pivot_weight(&self) -> f64 {
        self.modulus()
    }
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
}

impl Scalar for Exact {
    fn pick(table: &Table) -> &[Self] {
        &table.exact
    }
    fn from_exact(v: &Exact) -> Self {
        v.clone()
    }
    fn from_i64(v: i64) -> Self {
        Complex::new(BigRational::from_integer(BigInt::from(v)), BigRational::zero())
    }
    fn modulus(&self) -> f64 {
        to_c64(self).norm()
    }
    fn conj(&self) -> Self {
        Complex::conj(self)
    }
    fn to_c64(&self) -> C64 {
        to_c64(self)
    }
    fn checked_div(&self, rhs: &Self) -> Option<Self> {
        if rhs.is_zero() {
            None
        } else {
            Some(self.clone() / rhs.clone())
        }
    }
}

impl Scalar for C64 {
    fn pick(table: &Table) -> &[Self] {
        &table.float
    }
    fn from_exact(v: &Exact) -> Self {
        to_c64(v)
    }
    fn from_i64(v: i64) -> Self {
        Complex::new(v as f64, 0.0)
    }
    fn modulus(&self) -> f64 {
        self.norm()
    }
    fn conj(&self) -> Self {
        Complex::conj(self)
    }
    fn to_c64(&self) -> C64 {
        *self
    }
    fn checked_div(&self, rhs: &Self) -> Option<Self> {
        if *rhs == C64::zero() {
            None
        } else {
            Some(self / rhs)
        }
    }
    fn is_negligible(&self) -> bool {
        self.norm() < 1e-300
    }
}

pub fn to_c64(v: &Exact) -> C64 {
    Complex::new(
        v.re.to_f64().unwrap_or(f64::NAN),
        v.im.to_f64().unwrap_or(f64::NAN),
    )
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn exact(num: i64, den: i64) -> Exact {
    Complex::new(rational(num, den), BigRational::zero())
}

pub fn exact_int(v: i64) -> Exact {
    Exact::from_i64(v)
}

/// `|re| + |im|`, an exact rational upper bound for the modulus.
pub fn taxicab(v: &Exact) -> BigRational {
    v.re.abs() + v.im.abs()
}

/// Parses `"p/q"`, `"p"`, or a decimal literal such as `"-0.25"`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let bad = || Error::arg(format!("not a rational number: {s:?}"));
    if let Some((p, q)) = t.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::arg(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let negative = int.trim_start().starts_with('-');
        let int_part = if int.is_empty() || int == "-" || int == "+" {
            BigInt::zero()
        } else {
            BigInt::from_str(int).map_err(|_| bad())?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part = BigRational::new(BigInt::from_str(frac).map_err(|_| bad())?, scale);
        let whole = BigRational::from_integer(int_part.abs()) + frac_part;
        return Ok(if negative { -whole } else { whole });
    }
    Ok(BigRational::from_integer(
        BigInt::from_str(t).map_err(|_| bad())?,
    ))
}

/// Canonical `"p/q"` (or `"p"` when integral) rendering.
pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn is_real(v: &Exact) -> bool {
    v.im.is_zero()
}

pub fn one_exact() -> Exact {
    Exact::one()
}
