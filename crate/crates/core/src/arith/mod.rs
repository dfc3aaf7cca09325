//! Exact integer arithmetic: factorizations, divisor sums, totient ratios.

mod primality;
mod robin;

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::highprec::{digits_to_bits, Dyadic, IntervalReal};

pub use primality::{is_prime_u128, FACTOR_CEILING_BITS};
pub use robin::{robin_check, robin_check_scaled, RobinOutcome, Verdict};

/// Prime-power decomposition with strictly increasing primes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Factorization {
    factors: Vec<(u128, u64)>,
}

impl Factorization {
    /// Validates ordering, primality and exponents.
    pub fn new(factors: Vec<(u128, u64)>) -> Result<Self> {
        for w in factors.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::invalid("primes must be strictly increasing"));
            }
        }
        for &(p, a) in &factors {
            if a == 0 {
                return Err(Error::invalid(format!("exponent of {p} must be positive")));
            }
            check_prime(p)?;
        }
        Ok(Factorization { factors })
    }

    /// Caller guarantees the invariants (used by generators that emit primes).
    pub fn from_sorted_unchecked(factors: Vec<(u128, u64)>) -> Self {
        debug_assert!(factors.windows(2).all(|w| w[0].0 < w[1].0));
        Factorization { factors }
    }

    pub fn one() -> Self {
        Factorization::default()
    }

    pub fn factors(&self) -> &[(u128, u64)] {
        &self.factors
    }

    pub fn omega(&self) -> usize {
        self.factors.len()
    }

    pub fn nu(&self, p: u128) -> u64 {
        self.factors
            .binary_search_by_key(&p, |&(q, _)| q)
            .map(|i| self.factors[i].1)
            .unwrap_or(0)
    }

    pub fn value(&self) -> BigUint {
        let mut v = BigUint::one();
        for &(p, a) in &self.factors {
            v *= BigUint::from(p).pow(a as u32);
        }
        v
    }

    /// Value as `u128` when it fits.
    pub fn value_u128(&self) -> Option<u128> {
        let mut v = 1u128;
        for &(p, a) in &self.factors {
            for _ in 0..a {
                v = v.checked_mul(p)?;
            }
        }
        Some(v)
    }

    /// Factorization with the power of two removed.
    pub fn odd_part(&self) -> Factorization {
        Factorization {
            factors: self.factors.iter().copied().filter(|&(p, _)| p != 2).collect(),
        }
    }

    /// Product of two factorizations.
    pub fn mul(&self, other: &Factorization) -> Factorization {
        let mut out = Vec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() || j < other.factors.len() {
            match (self.factors.get(i), other.factors.get(j)) {
                (Some(&(p, a)), Some(&(q, b))) if p == q => {
                    out.push((p, a + b));
                    i += 1;
                    j += 1;
                }
                (Some(&(p, a)), Some(&(q, _))) if p < q => {
                    out.push((p, a));
                    i += 1;
                }
                (Some(_), Some(&(q, b))) => {
                    out.push((q, b));
                    j += 1;
                }
                (Some(&f), None) => {
                    out.push(f);
                    i += 1;
                }
                (None, Some(&f)) => {
                    out.push(f);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        Factorization { factors: out }
    }

    /// Enclosure of `ln n`.
    pub fn ln_value(&self, digits: u32) -> Result<IntervalReal> {
        let mut acc = IntervalReal::from_int(0, digits);
        for &(p, a) in &self.factors {
            let lp = IntervalReal::from_int(p, digits).ln()?;
            acc = acc.add(&lp.mul(&IntervalReal::from_int(a, digits)));
        }
        Ok(acc)
    }

    /// Enclosure of `sigma(n)/n`, usable when the exponents are too large for
    /// exact rationals.
    pub fn sigma_ratio_interval(&self, digits: u32) -> Result<IntervalReal> {
        let bits = digits_to_bits(digits);
        let mut acc = IntervalReal::from_int(1, digits);
        for &(p, a) in &self.factors {
            let pp = IntervalReal::from_ratio(
                &BigRational::new(BigInt::from(p), BigInt::from(p - 1)),
                digits,
            );
            // 1 - p^-(a+1): exact when small, otherwise enclosed in [1 - 2^-k, 1].
            let log2_size = (a as f64 + 1.0) * (p as f64).log2();
            let corr = if log2_size < (bits as f64) * 4.0 + 64.0 {
                let den = BigInt::from(p).pow((a + 1) as u32);
                IntervalReal::from_ratio(&BigRational::new(&den - 1u32, den), digits)
            } else {
                let tiny = Dyadic::new(BigInt::one(), -((bits * 4 + 64) as i64));
                let one = Dyadic::from_int(1);
                IntervalReal::from_exact_bounds(one.sub(&tiny), one, digits)
            };
            acc = acc.mul(&pp).mul(&corr);
        }
        Ok(acc)
    }

    /// Parse `p1^a1*p2^a2*...` (order free, repeated primes merged) or `1`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        if t == "1" {
            return Ok(Factorization::one());
        }
        let mut items: Vec<(u128, u64)> = Vec::new();
        for part in t.split('*') {
            let part = part.trim();
            let (p, a) = match part.split_once('^') {
                Some((p, a)) => (p.trim(), a.trim()),
                None => (part, "1"),
            };
            let p: u128 = p
                .parse()
                .map_err(|_| Error::invalid(format!("bad prime {p:?} in {s:?}")))?;
            let a: u64 = a
                .parse()
                .map_err(|_| Error::invalid(format!("bad exponent {a:?} in {s:?}")))?;
            if a == 0 {
                continue;
            }
            items.push((p, a));
        }
        items.sort();
        let mut merged: Vec<(u128, u64)> = Vec::new();
        for (p, a) in items {
            match merged.last_mut() {
                Some(last) if last.0 == p => last.1 += a,
                _ => merged.push((p, a)),
            }
        }
        Factorization::new(merged)
    }
}

impl fmt::Display for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.factors.iter().map(|(p, a)| format!("{p}^{a}")).collect();
        write!(f, "{}", parts.join("*"))
    }
}

impl FromStr for Factorization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Factorization::parse(s)
    }
}

impl Serialize for Factorization {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

fn check_prime(p: u128) -> Result<()> {
    if p >> FACTOR_CEILING_BITS != 0 {
        return Err(Error::Capacity {
            detail: format!("cannot certify primality of {p} (limit 2^{FACTOR_CEILING_BITS})"),
            resume: None,
        });
    }
    if !is_prime_u128(p) {
        return Err(Error::invalid(format!("{p} is not prime")));
    }
    Ok(())
}

/// Exact factorization of `1 <= n < 2^81`.
pub fn factorize(n: &BigUint) -> Result<Factorization> {
    if n.is_zero() {
        return Err(Error::invalid("cannot factor 0"));
    }
    if n.bits() > FACTOR_CEILING_BITS as u64 {
        return Err(Error::Capacity {
            detail: format!("{n} exceeds the factorization ceiling 2^{FACTOR_CEILING_BITS}"),
            resume: None,
        });
    }
    Ok(factorize_u128(n.to_u128().unwrap()))
}

/// Factorization of a native integer `1 <= n < 2^81`.
pub fn factorize_u128(mut n: u128) -> Factorization {
    assert!(n >= 1 && n >> FACTOR_CEILING_BITS == 0);
    let mut out: Vec<(u128, u64)> = Vec::new();
    let mut d = 2u128;
    while d < 1 << 12 && d * d <= n {
        if n % d == 0 {
            let mut a = 0;
            while n % d == 0 {
                n /= d;
                a += 1;
            }
            out.push((d, a));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        let mut stack = vec![n];
        let mut big: Vec<u128> = Vec::new();
        while let Some(m) = stack.pop() {
            if m == 1 {
                continue;
            }
            if d * d > m || is_prime_u128(m) {
                big.push(m);
                continue;
            }
            let f = primality::pollard_rho(m);
            stack.push(f);
            stack.push(m / f);
        }
        big.sort();
        for p in big {
            match out.last_mut() {
                Some(last) if last.0 == p => last.1 += 1,
                _ => out.push((p, 1)),
            }
        }
    }
    Factorization { factors: out }
}

/// Rational in lowest terms with positive denominator.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactRatio(pub BigRational);

impl ExactRatio {
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Self> {
        let den = den.into();
        if den.is_zero() {
            return Err(Error::invalid("zero denominator"));
        }
        Ok(ExactRatio(BigRational::new(num.into(), den)))
    }

    pub fn one() -> Self {
        ExactRatio(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn mul(&self, o: &ExactRatio) -> ExactRatio {
        ExactRatio(&self.0 * &o.0)
    }

    pub fn to_interval(&self, digits: u32) -> IntervalReal {
        IntervalReal::from_ratio(&self.0, digits)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(ExactRatio(crate::highprec::parse_ratio(s)?))
    }
}

impl fmt::Display for ExactRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl Serialize for ExactRatio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `sigma(n)/n = prod (p^(a+1) - 1) / (p^a (p - 1))`.
pub fn sigma_over_n(f: &Factorization) -> ExactRatio {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for &(p, a) in &f.factors {
        let pa = BigInt::from(p).pow(a as u32);
        num *= &pa * p - 1u32;
        den *= pa * (p - 1);
    }
    ExactRatio(BigRational::new(num, den))
}

/// `n/phi(n) = prod p/(p-1)`.
pub fn n_over_phi(f: &Factorization) -> ExactRatio {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for &(p, _) in &f.factors {
        num *= p;
        den *= p - 1;
    }
    ExactRatio(BigRational::new(num, den))
}

/// `prod (1 - p^-(1+a))`, the factor relating the two ratios above.
pub fn lemma1_product(f: &Factorization) -> ExactRatio {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for &(p, a) in &f.factors {
        let q = BigInt::from(p).pow((a + 1) as u32);
        num *= &q - 1u32;
        den *= q;
    }
    ExactRatio(BigRational::new(num, den))
}

/// Exponent of the prime `p` in `f`.
pub fn p_adic_order(f: &Factorization, p: u128) -> Result<u64> {
    check_prime(p)?;
    Ok(f.nu(p))
}

/// `sigma(n)` for a native integer, by trial division.
pub fn sigma_u64(n: u64) -> u128 {
    assert!(n >= 1);
    let f = factorize_u128(n as u128);
    f.factors
        .iter()
        .map(|&(p, a)| (p.pow(a as u32 + 1) - 1) / (p - 1))
        .product()
}
