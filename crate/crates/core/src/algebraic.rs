//! Exact arithmetic in the real field Q(β) for β = a^{1/n}.
//!
//! The potential coefficients involve β = δ^{1/d}, which is irrational
//! whenever δ is not a perfect d-th power. Tight verification steps
//! cancel their irrational parts exactly (e.g. a server leaving one
//! excessive edge while another enters one), so interval arithmetic
//! alone can never certify them: any enclosure of an exact zero keeps
//! a nonzero width. Elements here are polynomials in β with rational
//! coefficients, reduced modulo the minimal polynomial x^n − a, so
//! cancellation is literal and every comparison is decided exactly.
//!
//! Sign determination of a nonzero element still uses a rational
//! interval enclosure of β, refined geometrically: a nonzero element
//! of a number field has a nonzero value, so the refinement always
//! terminates.

use std::cmp::Ordering;

use num::bigint::BigInt;
use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::interval::RatInterval;
use crate::rational::Rat;

/// Bit budget for sign refinement; a nonzero value resolves long
/// before this, so hitting the cap indicates a logic error upstream.
const MAX_SIGN_BITS: u32 = 1 << 16;

/// An element c₀ + c₁β + … + c_{deg−1}β^{deg−1} of Q(β), β = arg^{1/deg}
/// with x^deg − arg irreducible over Q. Purely rational values use
/// deg = 1 (where β plays no role) and mix freely with any field.
#[derive(Clone, Debug)]
pub struct AlgNum {
    deg: usize,
    arg: Rat,
    c: Vec<Rat>,
}

/// x^{1/n} when it is exactly rational (numerator and denominator are
/// both perfect n-th powers of the reduced form).
pub fn exact_nth_root(x: &Rat, n: u32) -> Option<Rat> {
    if !x.is_positive() {
        return None;
    }
    let rn = x.numer().nth_root(n);
    let rd = x.denom().nth_root(n);
    if &rn.pow(n) == x.numer() && &rd.pow(n) == x.denom() {
        Some(Rat::new(rn, rd))
    } else {
        None
    }
}

impl AlgNum {
    pub fn from_rat(r: Rat) -> Self {
        Self {
            deg: 1,
            arg: r.clone(),
            c: vec![r],
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rat(Rat::from_integer(BigInt::from(n)))
    }

    /// The positive real n-th root of x > 0, in its minimal field:
    /// perfect prime-power factors of the root are stripped first, so
    /// the remaining x^deg − arg is irreducible over Q (for a positive
    /// radicand this only requires that arg is no perfect p-th power
    /// for any prime p dividing deg).
    pub fn nth_root(x: &Rat, n: u32) -> Result<Self> {
        if !x.is_positive() {
            return Err(Error::InvalidConfig(
                "nth_root of non-positive value".into(),
            ));
        }
        let mut arg = x.clone();
        let mut deg = n;
        'reduce: loop {
            if deg == 1 {
                return Ok(Self::from_rat(arg));
            }
            for p in [2u32, 3, 5, 7, 11, 13] {
                if deg.is_multiple_of(p) {
                    if let Some(r) = exact_nth_root(&arg, p) {
                        arg = r;
                        deg /= p;
                        continue 'reduce;
                    }
                }
            }
            // no prime factor of deg admits an exact root
            break;
        }
        let mut c = vec![Rat::zero(); deg as usize];
        c[1] = Rat::one();
        Ok(Self {
            deg: deg as usize,
            arg,
            c,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(Zero::is_zero)
    }

    /// The exact rational value, when the element has one.
    pub fn as_rat(&self) -> Option<Rat> {
        if self.c[1..].iter().all(Zero::is_zero) {
            Some(self.c[0].clone())
        } else {
            None
        }
    }

    fn one_like(&self) -> Self {
        let mut c = vec![Rat::zero(); self.deg];
        c[0] = Rat::one();
        Self {
            deg: self.deg,
            arg: self.arg.clone(),
            c,
        }
    }

    /// Aligns two operands into a common field: rational (deg-1)
    /// values are promoted; two distinct proper extensions never meet
    /// in one computation here.
    fn aligned(&self, other: &Self) -> (Self, Self) {
        if self.deg == other.deg && self.arg == other.arg {
            return (self.clone(), other.clone());
        }
        if self.deg == 1 {
            let mut c = vec![Rat::zero(); other.deg];
            c[0] = self.c[0].clone();
            return (
                Self {
                    deg: other.deg,
                    arg: other.arg.clone(),
                    c,
                },
                other.clone(),
            );
        }
        if other.deg == 1 {
            let (b, a) = other.aligned(self);
            return (a, b);
        }
        panic!("AlgNum operands from distinct algebraic fields");
    }

    pub fn add(&self, other: &Self) -> Self {
        let (mut a, b) = self.aligned(other);
        for (x, y) in a.c.iter_mut().zip(&b.c) {
            *x += y;
        }
        a
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut a = self.clone();
        for x in &mut a.c {
            *x = -x.clone();
        }
        a
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = self.aligned(other);
        let deg = a.deg;
        let mut prod = vec![Rat::zero(); 2 * deg - 1];
        for (i, x) in a.c.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.c.iter().enumerate() {
                if !y.is_zero() {
                    prod[i + j] += x * y;
                }
            }
        }
        // reduce via β^deg = arg
        for idx in (deg..prod.len()).rev() {
            let v = std::mem::replace(&mut prod[idx], Rat::zero());
            if !v.is_zero() {
                prod[idx - deg] += v * &a.arg;
            }
        }
        prod.truncate(deg);
        Self {
            deg,
            arg: a.arg,
            c: prod,
        }
    }

    pub fn mul_rat(&self, r: &Rat) -> Self {
        let mut a = self.clone();
        for x in &mut a.c {
            *x *= r;
        }
        a
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = self.one_like();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Multiplicative inverse, by solving self · x = 1 as a linear
    /// system over the power basis (Gaussian elimination; deg ≤ a few).
    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::InvalidConfig("division by algebraic zero".into()));
        }
        if let Some(r) = self.as_rat() {
            let mut a = self.clone();
            a.c[0] = r.recip();
            return Ok(a);
        }
        let deg = self.deg;
        // columns of m: coefficients of self · β^j
        let mut cols = Vec::with_capacity(deg);
        let mut shifted = self.clone();
        for _ in 0..deg {
            cols.push(shifted.c.clone());
            // multiply by β: shift up, reduce the overflow via β^deg = arg
            let top = shifted.c.pop().unwrap();
            shifted.c.insert(0, top * &self.arg);
        }
        // augmented system m·x = e₀, row-major
        let mut m = vec![vec![Rat::zero(); deg + 1]; deg];
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                m[i][j] = v.clone();
            }
        }
        m[0][deg] = Rat::one();
        for col in 0..deg {
            let pivot = (col..deg)
                .find(|&r| !m[r][col].is_zero())
                .ok_or_else(|| Error::Invariant("singular multiplication matrix".into()))?;
            m.swap(col, pivot);
            let p = m[col][col].clone();
            for v in &mut m[col][col..] {
                *v = &*v / &p;
            }
            for row in 0..deg {
                if row != col && !m[row][col].is_zero() {
                    let f = m[row][col].clone();
                    // indexing two rows of the same matrix; an iterator
                    // form would need a split borrow for no gain
                    #[allow(clippy::needless_range_loop)]
                    for j in col..=deg {
                        let s = &m[col][j] * &f;
                        m[row][j] -= s;
                    }
                }
            }
        }
        let c = m.into_iter().map(|row| row[deg].clone()).collect();
        Ok(Self {
            deg,
            arg: self.arg.clone(),
            c,
        })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.aligned(other);
        Ok(a.mul(&b.recip()?))
    }

    /// A rational interval enclosing the value, from a `bits`-bit
    /// enclosure of β. Rational values collapse to exact intervals.
    pub fn enclosure(&self, bits: u32) -> Result<RatInterval> {
        if let Some(r) = self.as_rat() {
            return Ok(RatInterval::exact(r));
        }
        let root = RatInterval::nth_root(&self.arg, self.deg as u32, bits)?;
        let mut acc = RatInterval::exact(self.c[0].clone());
        let mut p = RatInterval::from_int(1);
        for coeff in &self.c[1..] {
            p = p.mul(&root);
            if !coeff.is_zero() {
                acc = acc.add(&p.mul_rat(coeff));
            }
        }
        Ok(acc)
    }

    /// The exact sign of the value.
    pub fn sign(&self) -> Result<Ordering> {
        if let Some(r) = self.as_rat() {
            return Ok(r.cmp(&Rat::zero()));
        }
        let mut bits = 64u32;
        while bits <= MAX_SIGN_BITS {
            let e = self.enclosure(bits)?;
            if e.lo.is_positive() {
                return Ok(Ordering::Greater);
            }
            if e.hi.is_negative() {
                return Ok(Ordering::Less);
            }
            bits *= 2;
        }
        Err(Error::Precision(
            "sign of a nonzero algebraic value did not resolve".into(),
        ))
    }

    pub fn cmp_exact(&self, other: &Self) -> Result<Ordering> {
        self.sub(other).sign()
    }

    pub fn is_le(&self, other: &Self) -> Result<bool> {
        Ok(self.cmp_exact(other)? != Ordering::Greater)
    }

    pub fn is_le_rat(&self, r: &Rat) -> Result<bool> {
        Ok(self.sub(&Self::from_rat(r.clone())).sign()? != Ordering::Greater)
    }

    pub fn is_ge_rat(&self, r: &Rat) -> Result<bool> {
        Ok(self.sub(&Self::from_rat(r.clone())).sign()? != Ordering::Less)
    }

    pub fn max(&self, other: &Self) -> Result<Self> {
        Ok(if self.cmp_exact(other)? == Ordering::Less {
            other.clone()
        } else {
            self.clone()
        })
    }

    /// ⌊self · m⌋, exact. A rational value floors directly; an
    /// irrational one is never an integer, so enclosure refinement
    /// always pins the floor down.
    pub fn floor_mul_usize(&self, m: usize) -> Result<BigInt> {
        let v = self.mul_rat(&Rat::from_integer(BigInt::from(m)));
        if let Some(r) = v.as_rat() {
            return Ok(r.floor().to_integer());
        }
        let mut bits = 64u32;
        while bits <= MAX_SIGN_BITS {
            let e = v.enclosure(bits)?;
            let lo = e.lo.floor().to_integer();
            if lo == e.hi.floor().to_integer() {
                return Ok(lo);
            }
            bits *= 2;
        }
        Err(Error::Precision(
            "floor of algebraic value ambiguous".into(),
        ))
    }

    /// ⌈self⌉, exact (same reasoning as `floor_mul_usize`).
    pub fn ceil(&self) -> Result<BigInt> {
        if let Some(r) = self.as_rat() {
            return Ok(r.ceil().to_integer());
        }
        let mut bits = 64u32;
        while bits <= MAX_SIGN_BITS {
            let e = self.enclosure(bits)?;
            let lo = e.lo.ceil().to_integer();
            if lo == e.hi.ceil().to_integer() {
                return Ok(lo);
            }
            bits *= 2;
        }
        Err(Error::Precision(
            "ceiling of algebraic value ambiguous".into(),
        ))
    }
}

impl PartialEq for AlgNum {
    fn eq(&self, other: &Self) -> bool {
        self.sub(other).is_zero()
    }
}
