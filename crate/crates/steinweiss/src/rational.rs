//! Exact rational scalars and their `"num/den"` string encoding.
//!
//! Every exponent-side quantity in this crate (`alpha`, `p`, `q`, `gamma`,
//! `delta`, constraint margins, predicted growth exponents) is kept as a
//! [`BigRational`] so that equalities and strict inequalities are decided
//! exactly. Floats appear only in the quadrature and operator layers.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RationalParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid rational literal {0:?} (expected \"num\" or \"num/den\")")]
    Malformed(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

/// Builds `n/d`. Panics on `d == 0`; intended for literals in code and tests.
pub fn rat(n: i64, d: i64) -> Rational {
    assert!(d != 0, "zero denominator");
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rat_zero() -> Rational {
    BigRational::zero()
}

pub fn rat_one() -> Rational {
    BigRational::one()
}

/// 2^k for integer k of either sign.
pub fn rat_pow2(k: i32) -> Rational {
    let two = BigInt::from(2);
    if k >= 0 {
        BigRational::from_integer(two.pow(k as u32))
    } else {
        BigRational::new(BigInt::one(), two.pow((-k) as u32))
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().expect("rational out of f64 range")
}

/// Parses `"num"` or `"num/den"` with optional leading sign.
pub fn parse_rational(s: &str) -> Result<Rational, RationalParseError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(RationalParseError::Empty);
    }
    let mut parts = s.splitn(2, '/');
    let num_part = parts.next().unwrap();
    let num: BigInt = num_part
        .parse()
        .map_err(|_| RationalParseError::Malformed(s.to_string()))?;
    match parts.next() {
        None => Ok(BigRational::from_integer(num)),
        Some(den_part) => {
            let den: BigInt = den_part
                .parse()
                .map_err(|_| RationalParseError::Malformed(s.to_string()))?;
            if den.is_zero() {
                return Err(RationalParseError::ZeroDenominator(s.to_string()));
            }
            Ok(BigRational::new(num, den))
        }
    }
}

/// Renders in the schema form: integers without a denominator, otherwise `num/den`.
pub fn rational_to_string(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Serde adapter for a single rational field stored as a string.
pub mod serde_rational {
    use super::*;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&rational_to_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let raw = String::deserialize(d)?;
        parse_rational(&raw).map_err(D::Error::custom)
    }
}

/// Serde adapter for `Vec<Rational>` stored as a string array.
pub mod serde_rational_vec {
    use super::*;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(rational_to_string))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| parse_rational(s).map_err(D::Error::custom))
            .collect()
    }
}
