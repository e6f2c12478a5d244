//! Rational interval arithmetic with directed rounding.
//!
//! The potential-function coefficients involve δ^{1/d}, which is
//! irrational in general. Instead of floating point we enclose every
//! such value in a rational interval of width ≤ 2^-bits and propagate
//! the enclosure through all coefficient arithmetic. An inequality is
//! only reported as verified when it holds for the whole enclosure,
//! so a PASS is always sound. Rational inputs stay exact (lo == hi).

use num::bigint::BigInt;
use num::{One, Signed};

use crate::error::{Error, Result};
use crate::rational::Rat;

#[derive(Clone, Debug, PartialEq)]
pub struct RatInterval {
    pub lo: Rat,
    pub hi: Rat,
}

impl RatInterval {
    pub fn exact(r: Rat) -> Self {
        Self {
            lo: r.clone(),
            hi: r,
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::exact(Rat::from_integer(BigInt::from(n)))
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> Rat {
        &self.hi - &self.lo
    }

    /// Enclosure of x^{1/n} for x > 0, with width ≤ 2 / 2^bits.
    pub fn nth_root(x: &Rat, n: u32, bits: u32) -> Result<Self> {
        if !x.is_positive() {
            return Err(Error::InvalidConfig(
                "nth_root of non-positive value".into(),
            ));
        }
        if n == 1 {
            return Ok(Self::exact(x.clone()));
        }
        let scale = BigInt::one() << bits;
        let pow = scale.pow(n);
        // lo: floor of the root of the floored scaling.
        let t_lo = (x.numer() * &pow) / x.denom();
        let r_lo = t_lo.nth_root(n);
        // hi: the root of the ceiled scaling, rounded up by one ulp.
        let t_hi_num = x.numer() * &pow + x.denom() - BigInt::one();
        let t_hi = t_hi_num / x.denom();
        let r_hi = t_hi.nth_root(n) + BigInt::one();
        let lo = Rat::new(r_lo, scale.clone());
        let hi = Rat::new(r_hi, scale);
        // If the root happens to be exactly rational at this scale, the
        // bounds may be collapsible; check for an exact hit.
        if &lo.pow(n as i32) == x {
            return Ok(Self::exact(lo));
        }
        debug_assert!(lo <= hi);
        Ok(Self { lo, hi })
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            lo: -self.hi.clone(),
            hi: -self.lo.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let cands = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = cands.iter().min().unwrap().clone();
        let hi = cands.iter().max().unwrap().clone();
        Self { lo, hi }
    }

    pub fn mul_rat(&self, r: &Rat) -> Self {
        if r.is_negative() {
            Self {
                lo: &self.hi * r,
                hi: &self.lo * r,
            }
        } else {
            Self {
                lo: &self.lo * r,
                hi: &self.hi * r,
            }
        }
    }

    /// Division; the divisor interval must not contain zero.
    pub fn div(&self, other: &Self) -> Result<Self> {
        if !(other.lo.is_positive() || other.hi.is_negative()) {
            return Err(Error::Precision(
                "interval division by interval containing 0".into(),
            ));
        }
        let inv = Self {
            lo: other.hi.recip(),
            hi: other.lo.recip(),
        };
        Ok(self.mul(&inv))
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::from_int(1);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn max(&self, other: &Self) -> Self {
        Self {
            lo: self.lo.clone().max(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    /// True only if `self <= other` holds for every pair of members.
    pub fn definitely_le(&self, other: &Self) -> bool {
        self.hi <= other.lo
    }

    pub fn definitely_le_rat(&self, r: &Rat) -> bool {
        &self.hi <= r
    }

    pub fn definitely_ge_rat(&self, r: &Rat) -> bool {
        &self.lo >= r
    }

    /// floor(self * m) when unambiguous across the enclosure.
    pub fn floor_mul_usize(&self, m: usize) -> Result<BigInt> {
        let m = Rat::from_integer(BigInt::from(m));
        let lo = (&self.lo * &m).floor().to_integer();
        let hi = (&self.hi * &m).floor().to_integer();
        if lo == hi {
            Ok(lo)
        } else {
            Err(Error::Precision(format!(
                "ambiguous floor: interval straddles an integer times {m}"
            )))
        }
    }

    /// ceil(self) when unambiguous.
    pub fn ceil(&self) -> Result<BigInt> {
        let lo = self.lo.ceil().to_integer();
        let hi = self.hi.ceil().to_integer();
        if lo == hi {
            Ok(lo)
        } else {
            Err(Error::Precision("ambiguous ceiling".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rint};

    #[test]
    fn root_of_perfect_power_is_exact() {
        let r = RatInterval::nth_root(&rint(8), 3, 128).unwrap();
        assert!(r.is_exact());
        assert_eq!(r.lo, rint(2));
        let r = RatInterval::nth_root(&rat(9, 4), 2, 128).unwrap();
        assert!(r.is_exact());
        assert_eq!(r.lo, rat(3, 2));
    }

    #[test]
    fn root_enclosure_brackets_the_value() {
        let x = rat(3, 2);
        let r = RatInterval::nth_root(&x, 2, 128).unwrap();
        assert!(r.lo.pow(2) <= x && x <= r.hi.pow(2));
        assert!(r.width() <= rat(1, 1) / Rat::from_integer(BigInt::one() << 120));
    }

    #[test]
    fn arithmetic_preserves_enclosure() {
        let a = RatInterval::nth_root(&rat(3, 2), 3, 64).unwrap();
        let g = a.div(&a.sub(&RatInterval::from_int(1))).unwrap();
        // gamma = beta/(beta-1) for beta = (3/2)^(1/3) ~ 1.1447 -> ~7.91
        assert!(g.lo > rint(7) && g.hi < rint(9));
        let prod = a.mul(&a).mul(&a);
        assert!(prod.lo <= rat(3, 2) && rat(3, 2) <= prod.hi);
    }

    #[test]
    fn ambiguous_floor_is_detected() {
        let straddle = RatInterval {
            lo: rat(199, 100),
            hi: rat(201, 100),
        };
        assert!(straddle.floor_mul_usize(1).is_err());
        let fine = RatInterval {
            lo: rat(301, 100),
            hi: rat(302, 100),
        };
        assert_eq!(fine.floor_mul_usize(2).unwrap(), BigInt::from(6));
    }
}
