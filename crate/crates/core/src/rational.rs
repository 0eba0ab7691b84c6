//! Small helpers around `BigRational`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// Parses `"p/q"`, an integer, or a decimal literal.
///
/// Returns the value and whether it was given exactly (`p/q` or integer).
/// Decimals are converted from their exact binary `f64` value.
pub fn parse(s: &str) -> Result<(BigRational, bool)> {
    let t = s.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| Error::Parse(format!("bad numerator in {t:?}")))?;
        let q: BigInt = q.trim().parse().map_err(|_| Error::Parse(format!("bad denominator in {t:?}")))?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {t:?}")));
        }
        return Ok((BigRational::new(p, q), true));
    }
    if let Ok(n) = t.parse::<BigInt>() {
        return Ok((BigRational::from_integer(n), true));
    }
    let x: f64 = t.parse().map_err(|_| Error::Parse(format!("not a number: {t:?}")))?;
    let r = BigRational::from_float(x).ok_or_else(|| Error::Parse(format!("non-finite number {t:?}")))?;
    Ok((r, false))
}

/// Formats as `p/q`, or `p` when the denominator is one.
pub fn format(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(if x.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}

pub fn from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Binomial coefficient as a big integer.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `x^n` for a non-negative integer exponent.
pub fn pow(x: &BigRational, n: u32) -> BigRational {
    num_traits::pow(x.clone(), n as usize)
}
