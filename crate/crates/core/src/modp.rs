//! Prime-field scalars and binomial coefficients modulo a prime.
//!
//! The binomial routine accepts arbitrary integer arguments: `binom_mod_p(a, b, p)`
//! is the coefficient of `t^b` in the formal power series `(1 + t)^a`, reduced
//! mod `p`. This is what makes the Adem sums with negative upper arguments
//! finite and well defined.

use core::fmt;
use core::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub};

/// A prime number, checked at construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prime(u32);

/// Errors from the arithmetic layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ArithError {
    NotPrime(u64),
    NegativeArgument { a: i64, b: i64 },
}

impl fmt::Display for ArithError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithError::NotPrime(n) => write!(f, "{n} is not a prime"),
            ArithError::NegativeArgument { a, b } => {
                write!(f, "digit-product binomial needs nonnegative arguments, got ({a}, {b})")
            }
        }
    }
}

impl core::error::Error for ArithError {}

impl Prime {
    pub const TWO: Prime = Prime(2);

    pub fn new(value: u64) -> Result<Prime, ArithError> {
        if value < 2 || value > u32::MAX as u64 || !is_prime(value) {
            return Err(ArithError::NotPrime(value));
        }
        Ok(Prime(value as u32))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_two(self) -> bool {
        self.0 == 2
    }

    /// Canonical residue of an arbitrary integer.
    #[inline]
    pub fn reduce(self, n: i64) -> u32 {
        n.rem_euclid(self.0 as i64) as u32
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// An element of the field with `p` elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FpScalar {
    residue: u32,
    prime: Prime,
}

impl FpScalar {
    pub fn new(n: i64, prime: Prime) -> FpScalar {
        FpScalar { residue: prime.reduce(n), prime }
    }

    pub fn zero(prime: Prime) -> FpScalar {
        FpScalar { residue: 0, prime }
    }

    pub fn one(prime: Prime) -> FpScalar {
        FpScalar { residue: 1, prime }
    }

    #[inline]
    pub fn residue(self) -> u32 {
        self.residue
    }

    #[inline]
    pub fn prime(self) -> Prime {
        self.prime
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.residue == 0
    }

    pub fn pow(self, mut e: u64) -> FpScalar {
        let p = self.prime.0 as u64;
        let mut base = self.residue as u64;
        let mut acc = 1u64 % p;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % p;
            }
            base = base * base % p;
            e >>= 1;
        }
        FpScalar { residue: acc as u32, prime: self.prime }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inverse(self) -> Option<FpScalar> {
        if self.is_zero() {
            None
        } else {
            Some(self.pow(self.prime.0 as u64 - 2))
        }
    }
}

impl fmt::Display for FpScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.residue)
    }
}

impl Add for FpScalar {
    type Output = FpScalar;
    fn add(self, rhs: FpScalar) -> FpScalar {
        debug_assert_eq!(self.prime, rhs.prime);
        let p = self.prime.0 as u64;
        FpScalar { residue: ((self.residue as u64 + rhs.residue as u64) % p) as u32, prime: self.prime }
    }
}

impl AddAssign for FpScalar {
    fn add_assign(&mut self, rhs: FpScalar) {
        *self = *self + rhs;
    }
}

impl Neg for FpScalar {
    type Output = FpScalar;
    fn neg(self) -> FpScalar {
        let p = self.prime.0;
        FpScalar { residue: (p - self.residue) % p, prime: self.prime }
    }
}

impl Sub for FpScalar {
    type Output = FpScalar;
    fn sub(self, rhs: FpScalar) -> FpScalar {
        self + (-rhs)
    }
}

impl Mul for FpScalar {
    type Output = FpScalar;
    fn mul(self, rhs: FpScalar) -> FpScalar {
        debug_assert_eq!(self.prime, rhs.prime);
        let p = self.prime.0 as u64;
        FpScalar { residue: (self.residue as u64 * rhs.residue as u64 % p) as u32, prime: self.prime }
    }
}

impl MulAssign for FpScalar {
    fn mul_assign(&mut self, rhs: FpScalar) {
        *self = *self * rhs;
    }
}

/// Multiplicity of `p` in `n!` (Legendre).
fn factorial_valuation(mut n: u64, p: u64) -> u64 {
    let mut v = 0;
    while n > 0 {
        n /= p;
        v += n;
    }
    v
}

/// `n!` with every factor of `p` removed, mod `p`, via Wilson's theorem.
fn factorial_unit_part(mut n: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    while n > 0 {
        let q = n / p;
        let r = n % p;
        let mut small = 1u64;
        for k in 2..=r {
            small = small * k % p;
        }
        acc = acc * small % p;
        if q % 2 == 1 {
            acc = (p - acc) % p;
        }
        n = q;
    }
    acc
}

fn binom_nonneg(n: u64, k: u64, prime: Prime) -> FpScalar {
    if k > n {
        return FpScalar::zero(prime);
    }
    let p = prime.0 as u64;
    let v = factorial_valuation(n, p) - factorial_valuation(k, p) - factorial_valuation(n - k, p);
    if v > 0 {
        return FpScalar::zero(prime);
    }
    let num = FpScalar { residue: factorial_unit_part(n, p) as u32, prime };
    let den = FpScalar { residue: (factorial_unit_part(k, p) * factorial_unit_part(n - k, p) % p) as u32, prime };
    num * den.inverse().expect("unit part is invertible")
}

/// Coefficient of `t^b` in `(1 + t)^a`, mod `p`, for arbitrary integers.
pub fn binom_mod_p(a: i64, b: i64, p: Prime) -> FpScalar {
    if b < 0 {
        return FpScalar::zero(p);
    }
    if a >= 0 {
        return binom_nonneg(a as u64, b as u64, p);
    }
    // (1+t)^{-m} = sum_k (-1)^k C(m+k-1, k) t^k
    let upper = (b as i128 - a as i128 - 1) as u64;
    let value = binom_nonneg(upper, b as u64, p);
    if b % 2 == 1 {
        -value
    } else {
        value
    }
}

/// Lucas' theorem: product of digit binomials in base `p`.
pub fn lucas_check(a: i64, b: i64, p: Prime) -> Result<FpScalar, ArithError> {
    if a < 0 || b < 0 {
        return Err(ArithError::NegativeArgument { a, b });
    }
    let pp = p.0 as u64;
    let (mut a, mut b) = (a as u64, b as u64);
    let mut acc = FpScalar::one(p);
    while a > 0 || b > 0 {
        let (ai, bi) = (a % pp, b % pp);
        if bi > ai {
            return Ok(FpScalar::zero(p));
        }
        // C(ai, bi) with ai < p: numerator falling product over bi!
        let mut num = FpScalar::one(p);
        let mut den = FpScalar::one(p);
        for j in 0..bi {
            num *= FpScalar::new((ai - j) as i64, p);
            den *= FpScalar::new((j + 1) as i64, p);
        }
        acc *= num * den.inverse().expect("digit factorial is a unit");
        a /= pp;
        b /= pp;
    }
    Ok(acc)
}
