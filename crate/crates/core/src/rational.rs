//! Exact rational scalars and their `"p/q"` text form.
//!
//! Every length, offset, speed, duration and cost in this crate is a
//! [`Rat`]; floating point never enters the core.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational number.
pub type Rat = BigRational;

/// Shorthand for a rational from two machine integers.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Rational from an integer.
pub fn rint(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rusize(n: usize) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses `"p/q"` or a bare integer `"p"`.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
    if den.is_zero() {
        return Err(Error::Parse(format!("zero denominator in `{s}`")));
    }
    Ok(Rat::new(num, den))
}

/// Renders a rational as `"p/q"`, or `"p"` when the denominator is 1.
pub fn fmt_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Rounded decimal rendering with `digits` fractional digits (for the
/// human-readable report columns; never used in computation).
pub fn fmt_decimal(r: &Rat, digits: u32) -> String {
    let scale = BigInt::from(10u32).pow(digits);
    let scaled = (r * Rat::from_integer(scale.clone())).round();
    let int = scaled.to_integer();
    let neg = int.is_negative();
    let abs = int.abs();
    let (hi, lo) = (abs.clone() / &scale, abs % &scale);
    let sign = if neg { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{hi}")
    } else {
        format!(
            "{sign}{hi}.{:0>width$}",
            lo.to_string(),
            width = digits as usize
        )
    }
}

/// Lossy f64 view, for logs only.
pub fn rat_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
