//! Exact rational arithmetic used for game values.
//!
//! Values are `Ratio<i64>`. On the wire a rational is a `[numerator, denominator]`
//! pair so that `8/9` never passes through a decimal.

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result};

pub type Rational = Ratio<i64>;

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a.abs()
}

fn checked_lcm(a: i64, b: i64) -> Option<i64> {
    if a == 0 || b == 0 {
        return Some(0);
    }
    (a / gcd(a, b)).checked_mul(b).map(i64::abs)
}

/// Parses `"p/q"`, an integer, or a plain decimal such as `"0.004"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(domain("empty rational"));
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| domain(format!("bad numerator in {s:?}")))?;
        let q: i64 = q.trim().parse().map_err(|_| domain(format!("bad denominator in {s:?}")))?;
        if q == 0 {
            return Err(domain(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(domain(format!("not a rational: {s:?}")));
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: i64 = digits
        .trim_start_matches('0')
        .parse()
        .or_else(|e: std::num::ParseIntError| {
            if digits.chars().all(|c| c == '0') {
                Ok(0)
            } else {
                Err(e)
            }
        })
        .map_err(|_| domain(format!("rational out of range: {s:?}")))?;
    let denom = 10i64
        .checked_pow(frac_part.len() as u32)
        .ok_or_else(|| domain(format!("too many decimal places: {s:?}")))?;
    let r = Rational::new(numer, denom);
    Ok(if neg { -r } else { r })
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Least common multiple of the denominators, so that every rational becomes an integer weight.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Result<i64> {
    values.into_iter().try_fold(1i64, |acc, r| {
        checked_lcm(acc, *r.denom()).ok_or_else(|| Error::Overflow("common denominator".into()))
    })
}

/// Scales `r` by `denominator`, which must be a multiple of `r.denom()`.
pub fn scaled_numerator(r: &Rational, denominator: i64) -> Result<i64> {
    debug_assert!(denominator % r.denom() == 0);
    r.numer()
        .checked_mul(denominator / r.denom())
        .ok_or_else(|| Error::Overflow("scaled weight".into()))
}

pub fn is_probability_vector(dist: &[Rational]) -> bool {
    !dist.is_empty()
        && dist.iter().all(|p| *p >= Rational::zero())
        && dist.iter().fold(Rational::zero(), |acc, p| acc + p) == Rational::from_integer(1)
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Serde adapter for `[numerator, denominator]` pairs.
pub mod pair {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        [*r.numer(), *r.denom()].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let [n, q] = <[i64; 2]>::deserialize(d)?;
        if q == 0 {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(Rational::new(n, q))
    }
}

/// Serde adapter for vectors of `[numerator, denominator]` pairs.
pub mod pair_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        v.iter()
            .map(|r| [*r.numer(), *r.denom()])
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Rational>, D::Error> {
        let raw = Vec::<[i64; 2]>::deserialize(d)?;
        raw.into_iter()
            .map(|[n, q]| {
                if q == 0 {
                    Err(serde::de::Error::custom("zero denominator"))
                } else {
                    Ok(Rational::new(n, q))
                }
            })
            .collect()
    }
}
