//! Rational interval enclosures for Beatty parameters.
//!
//! Decimal and fractional inputs are represented exactly; `sqrt(..)` inputs
//! are bracketed by dyadic rationals with `precision_bits` fractional bits.
//! Floors are only reported when the whole enclosure agrees on them.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub const DEFAULT_PRECISION_BITS: u32 = 128;

#[derive(Clone, PartialEq, Eq)]
pub struct Enclosure {
    lo: BigRational,
    hi: BigRational,
}

impl fmt::Debug for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "Enclosure({})", self.lo)
        } else {
            write!(f, "Enclosure[{:e}, {:e}]", self.lo_f64(), self.hi_f64())
        }
    }
}

fn parse_rational(text: &str) -> Option<BigRational> {
    let t = text.trim();
    if let Some((num, den)) = t.split_once('/') {
        let n = parse_rational(num)?;
        let d = parse_rational(den)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(digits.parse::<BigInt>().ok()?);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Some(if neg { -value } else { value })
}

fn floor_rational(r: &BigRational) -> BigInt {
    r.numer().div_floor(r.denom())
}

fn ceil_rational(r: &BigRational) -> BigInt {
    -((-r.numer()).div_floor(r.denom()))
}

fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl Enclosure {
    pub fn exact(r: BigRational) -> Self {
        Enclosure { lo: r.clone(), hi: r }
    }

    pub fn from_integer(n: i64) -> Self {
        Enclosure::exact(BigRational::from_integer(BigInt::from(n)))
    }

    /// Accepts a decimal (`1.25`, `-3e-2`), a fraction (`22/7`), or
    /// `sqrt(x)` for a non-negative decimal or fraction `x`.
    pub fn parse(text: &str, precision_bits: u32) -> Result<Self> {
        let t = text.trim();
        let bad = || Error::Domain(format!("cannot parse real number {text:?}"));
        if let Some(inner) = t.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
            let x = parse_rational(inner).ok_or_else(bad)?;
            return Enclosure::sqrt_of(&x, precision_bits);
        }
        parse_rational(t).map(Enclosure::exact).ok_or_else(bad)
    }

    /// Dyadic bracket of `sqrt(x)` with `bits` fractional bits.
    pub fn sqrt_of(x: &BigRational, bits: u32) -> Result<Self> {
        if x.is_negative() {
            return Err(Error::Domain("sqrt of a negative number".into()));
        }
        let scaled = x * BigRational::from_integer(BigInt::one() << (2 * bits as usize));
        let to_uint = |b: BigInt| b.to_biguint().unwrap_or_else(BigUint::zero);
        let floor = to_uint(floor_rational(&scaled));
        let ceil = to_uint(ceil_rational(&scaled));
        let lo_int = floor.sqrt();
        let mut hi_int = ceil.sqrt();
        if &hi_int * &hi_int < ceil {
            hi_int += 1u32;
        }
        let den = BigInt::one() << bits as usize;
        Ok(Enclosure {
            lo: BigRational::new(BigInt::from_biguint(Sign::Plus, lo_int), den.clone()),
            hi: BigRational::new(BigInt::from_biguint(Sign::Plus, hi_int), den),
        })
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    /// Lower endpoint rounded down to an `f64`.
    pub fn lo_f64(&self) -> f64 {
        let v = rational_to_f64(&self.lo);
        v.next_down().next_down()
    }

    /// Upper endpoint rounded up to an `f64`.
    pub fn hi_f64(&self) -> f64 {
        let v = rational_to_f64(&self.hi);
        v.next_up().next_up()
    }

    pub fn mid_f64(&self) -> f64 {
        rational_to_f64(&((&self.lo + &self.hi) / BigRational::from_integer(BigInt::from(2))))
    }

    pub fn add(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn sub(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
        }
    }

    pub fn mul(&self, other: &Enclosure) -> Enclosure {
        let c = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        Enclosure {
            lo: c.iter().min().unwrap().clone(),
            hi: c.iter().max().unwrap().clone(),
        }
    }

    pub fn mul_int(&self, m: i64) -> Enclosure {
        let k = BigRational::from_integer(BigInt::from(m));
        let (a, b) = (&self.lo * &k, &self.hi * &k);
        if m >= 0 {
            Enclosure { lo: a, hi: b }
        } else {
            Enclosure { lo: b, hi: a }
        }
    }

    pub fn div(&self, other: &Enclosure) -> Result<Enclosure> {
        if !other.lo.is_positive() && !other.hi.is_negative() {
            return Err(Error::Precision("divisor enclosure contains zero".into()));
        }
        let c = [
            &self.lo / &other.lo,
            &self.lo / &other.hi,
            &self.hi / &other.lo,
            &self.hi / &other.hi,
        ];
        Ok(Enclosure {
            lo: c.iter().min().unwrap().clone(),
            hi: c.iter().max().unwrap().clone(),
        })
    }

    /// `floor(x)` when it is the same for every point of the enclosure.
    pub fn floor(&self) -> Result<BigInt> {
        let a = floor_rational(&self.lo);
        if a == floor_rational(&self.hi) {
            Ok(a)
        } else {
            Err(Error::Precision(format!(
                "floor is ambiguous on [{:e}, {:e}]",
                self.lo_f64(),
                self.hi_f64()
            )))
        }
    }

    /// `ceil(x)` when it is the same for every point of the enclosure.
    pub fn ceil(&self) -> Result<BigInt> {
        let a = ceil_rational(&self.lo);
        if a == ceil_rational(&self.hi) {
            Ok(a)
        } else {
            Err(Error::Precision(format!(
                "ceiling is ambiguous on [{:e}, {:e}]",
                self.lo_f64(),
                self.hi_f64()
            )))
        }
    }

    /// Decides `self < m` for an integer `m`.
    pub fn less_than_int(&self, m: &BigInt) -> Result<bool> {
        let m = BigRational::from_integer(m.clone());
        if self.hi < m {
            Ok(true)
        } else if self.lo >= m {
            Ok(false)
        } else {
            Err(Error::Precision("comparison with an integer is ambiguous".into()))
        }
    }

    pub fn to_bigint_floor_i64(&self) -> Result<i64> {
        self.floor()?
            .to_i64()
            .ok_or_else(|| Error::OutOfRange("floor does not fit in i64".into()))
    }
}
