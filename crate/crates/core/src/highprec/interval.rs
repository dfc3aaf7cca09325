use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Serialize, Serializer};

use super::dyadic::{Dyadic, Round};
use super::kernels;
use crate::error::{Error, Result};

/// Default working precision in decimal digits.
pub const DEFAULT_DIGITS: u32 = 200;

/// Convert decimal digits to the binary precision used for rounding.
pub fn digits_to_bits(digits: u32) -> u64 {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as u64 + 8
}

/// Certified real enclosure `[lo, hi]`.
///
/// Every operation rounds outward, so the exact mathematical result of an
/// operation on any points of the operands lies inside the returned interval.
#[derive(Clone, PartialEq, Eq)]
pub struct IntervalReal {
    lo: Dyadic,
    hi: Dyadic,
    digits: u32,
}

/// Outcome of a certified comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
pub enum CertifiedOrder {
    Less,
    Greater,
    Undecided,
}

impl CertifiedOrder {
    pub fn reverse(self) -> Self {
        match self {
            CertifiedOrder::Less => CertifiedOrder::Greater,
            CertifiedOrder::Greater => CertifiedOrder::Less,
            CertifiedOrder::Undecided => CertifiedOrder::Undecided,
        }
    }

    pub fn is_decided(self) -> bool {
        self != CertifiedOrder::Undecided
    }
}

impl fmt::Debug for IntervalReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}, {:?}]@{}", self.lo, self.hi, self.digits)
    }
}

impl fmt::Display for IntervalReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.midpoint_string(20))
    }
}

impl Serialize for IntervalReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("IntervalReal", 3)?;
        st.serialize_field("lo", &self.lo.to_sci_string(25))?;
        st.serialize_field("hi", &self.hi.to_sci_string(25))?;
        st.serialize_field("mid", &self.midpoint_string(20))?;
        st.end()
    }
}

impl IntervalReal {
    fn bits(&self) -> u64 {
        digits_to_bits(self.digits)
    }

    /// Build from bounds, rounding them outward to the working precision.
    pub fn from_bounds(lo: Dyadic, hi: Dyadic, digits: u32) -> Self {
        assert!(lo <= hi, "interval bounds out of order: {lo:?} > {hi:?}");
        let bits = digits_to_bits(digits);
        IntervalReal {
            lo: lo.round(bits, Round::Floor),
            hi: hi.round(bits, Round::Ceil),
            digits,
        }
    }

    /// Build from bounds without rounding (exact endpoints kept as given).
    pub fn from_exact_bounds(lo: Dyadic, hi: Dyadic, digits: u32) -> Self {
        assert!(lo <= hi, "interval bounds out of order: {lo:?} > {hi:?}");
        IntervalReal { lo, hi, digits }
    }

    pub fn point(x: Dyadic, digits: u32) -> Self {
        IntervalReal::from_bounds(x.clone(), x, digits)
    }

    pub fn from_int(v: impl Into<BigInt>, digits: u32) -> Self {
        IntervalReal::point(Dyadic::from_int(v), digits)
    }

    pub fn from_ratio(r: &BigRational, digits: u32) -> Self {
        let bits = digits_to_bits(digits);
        let lo = Dyadic::from_ratio(r.numer(), r.denom(), bits, Round::Floor);
        let hi = Dyadic::from_ratio(r.numer(), r.denom(), bits, Round::Ceil);
        IntervalReal { lo, hi, digits }
    }

    /// Parse a plain decimal literal such as `1.0000005645` exactly.
    pub fn from_decimal(s: &str, digits: u32) -> Result<Self> {
        Ok(IntervalReal::from_ratio(&parse_decimal(s)?, digits))
    }

    pub fn lo(&self) -> &Dyadic {
        &self.lo
    }

    pub fn hi(&self) -> &Dyadic {
        &self.hi
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn with_digits(mut self, digits: u32) -> Self {
        self.digits = digits;
        self
    }

    pub fn width(&self) -> Dyadic {
        self.hi.sub(&self.lo)
    }

    pub fn contains(&self, x: &Dyadic) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_ratio(&self, r: &BigRational) -> bool {
        // lo <= num/den <=> lo*den <= num for den > 0
        let den = Dyadic::from_int(r.denom().clone());
        let num = Dyadic::from_int(r.numer().clone());
        self.lo.mul(&den) <= num && num <= self.hi.mul(&den)
    }

    pub fn mid(&self) -> Dyadic {
        self.lo.add(&self.hi).mul_pow2(-1)
    }

    pub fn mid_f64(&self) -> f64 {
        self.mid().to_f64()
    }

    pub fn midpoint_string(&self, sig: usize) -> String {
        self.mid().to_sci_string(sig)
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.hi.is_negative()
    }

    fn prec(&self, other: &IntervalReal) -> u32 {
        self.digits.max(other.digits)
    }

    pub fn neg(&self) -> Self {
        IntervalReal {
            lo: self.hi.neg(),
            hi: self.lo.neg(),
            digits: self.digits,
        }
    }

    pub fn add(&self, other: &IntervalReal) -> Self {
        IntervalReal::from_bounds(
            self.lo.add(&other.lo),
            self.hi.add(&other.hi),
            self.prec(other),
        )
    }

    pub fn sub(&self, other: &IntervalReal) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &IntervalReal) -> Self {
        let c = [
            self.lo.mul(&other.lo),
            self.lo.mul(&other.hi),
            self.hi.mul(&other.lo),
            self.hi.mul(&other.hi),
        ];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        IntervalReal::from_bounds(lo, hi, self.prec(other))
    }

    pub fn div(&self, other: &IntervalReal) -> Result<Self> {
        if !(other.lo.is_positive() || other.hi.is_negative()) {
            return Err(Error::domain("div", format!("divisor {other:?} contains zero")));
        }
        let digits = self.prec(other);
        let bits = digits_to_bits(digits);
        let mut lo: Option<Dyadic> = None;
        let mut hi: Option<Dyadic> = None;
        for a in [&self.lo, &self.hi] {
            for b in [&other.lo, &other.hi] {
                let ql = Dyadic::div(a, b, bits, Round::Floor);
                let qh = Dyadic::div(a, b, bits, Round::Ceil);
                lo = Some(match lo {
                    Some(l) if l <= ql => l,
                    _ => ql,
                });
                hi = Some(match hi {
                    Some(h) if h >= qh => h,
                    _ => qh,
                });
            }
        }
        Ok(IntervalReal {
            lo: lo.unwrap(),
            hi: hi.unwrap(),
            digits,
        })
    }

    pub fn mul_int(&self, k: i64) -> Self {
        self.mul(&IntervalReal::from_int(k, self.digits))
    }

    /// Natural logarithm; requires `lo > 0`.
    pub fn ln(&self) -> Result<Self> {
        if !self.lo.is_positive() {
            return Err(Error::domain("ln", format!("operand {self:?} is not strictly positive")));
        }
        let bits = self.bits() + 4;
        let (lo, _) = kernels::ln_bounds(&self.lo, bits)?;
        let hi = if self.lo == self.hi {
            kernels::ln_bounds(&self.hi, bits)?.1
        } else {
            kernels::ln_bounds(&self.hi, bits)?.1
        };
        Ok(IntervalReal::from_bounds(lo, hi, self.digits))
    }

    pub fn exp(&self) -> Result<Self> {
        let bits = self.bits() + 4;
        let (lo, hi0) = kernels::exp_bounds(&self.lo, bits)?;
        let hi = if self.lo == self.hi {
            hi0
        } else {
            kernels::exp_bounds(&self.hi, bits)?.1
        };
        let lo = if lo.is_negative() { Dyadic::zero() } else { lo };
        Ok(IntervalReal::from_bounds(lo, hi, self.digits))
    }

    /// `self^y = exp(y ln self)`; requires `lo > 0`.
    pub fn pow(&self, y: &IntervalReal) -> Result<Self> {
        if !self.lo.is_positive() {
            return Err(Error::domain("pow", format!("base {self:?} is not strictly positive")));
        }
        // Evaluate the inner product a little more precisely than the result.
        let d = self.prec(y);
        let inner = self.with_digits_ref(d + 10).ln()?.mul(&y.with_digits_ref(d + 10));
        Ok(inner.exp()?.with_digits(d).reround())
    }

    fn with_digits_ref(&self, digits: u32) -> Self {
        IntervalReal {
            lo: self.lo.clone(),
            hi: self.hi.clone(),
            digits,
        }
    }

    fn reround(self) -> Self {
        let d = self.digits;
        IntervalReal::from_bounds(self.lo, self.hi, d)
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &IntervalReal) -> Self {
        IntervalReal {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
            digits: self.prec(other),
        }
    }

    /// Intersection, or `None` when disjoint.
    pub fn intersect(&self, other: &IntervalReal) -> Option<Self> {
        let lo = self.lo.clone().max(other.lo.clone());
        let hi = self.hi.clone().min(other.hi.clone());
        (lo <= hi).then(|| IntervalReal {
            lo,
            hi,
            digits: self.prec(other),
        })
    }

    pub fn overlaps(&self, other: &IntervalReal) -> bool {
        !(self.hi < other.lo || other.hi < self.lo)
    }

    /// Integer bounds `(floor(lo), floor(hi))`.
    pub fn floor_bounds(&self) -> (BigInt, BigInt) {
        (
            self.lo.to_scaled_int(0, Round::Floor),
            self.hi.to_scaled_int(0, Round::Floor),
        )
    }
}

/// Certified comparison: decided only when the enclosures are disjoint.
pub fn compare(a: &IntervalReal, b: &IntervalReal) -> CertifiedOrder {
    if a.hi < b.lo {
        CertifiedOrder::Less
    } else if b.hi < a.lo {
        CertifiedOrder::Greater
    } else {
        CertifiedOrder::Undecided
    }
}

/// Comparison with geometric refinement: `eval(digits)` recomputes both sides;
/// digits double from `start` until the order is decided or `max_digits` is
/// exceeded, at which point `Undecided` is returned.
pub fn compare_refining<F>(start: u32, max_digits: u32, mut eval: F) -> Result<CertifiedOrder>
where
    F: FnMut(u32) -> Result<(IntervalReal, IntervalReal)>,
{
    let mut digits = start.max(10).min(max_digits.max(10));
    loop {
        let (a, b) = eval(digits)?;
        let ord = compare(&a, &b);
        if ord.is_decided() || digits >= max_digits {
            return Ok(ord);
        }
        digits = (digits * 2).min(max_digits);
    }
}

/// Parse `[-]digits[.digits]` as an exact rational.
pub fn parse_decimal(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((a, b)) => (a, b),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(Error::invalid(format!("not a decimal literal: {s:?}")));
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = digits.parse().unwrap_or_else(|_| BigInt::zero());
    if neg {
        num = -num;
    }
    let den = BigInt::from(10u32).pow(frac_part.len() as u32);
    Ok(BigRational::new(num, den))
}

/// Parse `P/Q`, a decimal, or an integer as an exact rational.
pub fn parse_ratio(s: &str) -> Result<BigRational> {
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad numerator in {s:?}")))?;
        let q: BigInt = q
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad denominator in {s:?}")))?;
        if q.is_zero() {
            return Err(Error::invalid(format!("zero denominator in {s:?}")));
        }
        Ok(BigRational::new(p, q))
    } else {
        parse_decimal(s)
    }
}

impl IntervalReal {
    /// Magnitude bound `max(|lo|, |hi|)`.
    pub fn mag(&self) -> Dyadic {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn abs_lo_positive(&self) -> bool {
        self.lo.is_positive() || self.hi.is_negative()
    }

    pub fn sign_known(&self) -> Option<i32> {
        if self.lo.is_positive() {
            Some(1)
        } else if self.hi.is_negative() {
            Some(-1)
        } else if self.lo.is_zero() && self.hi.is_zero() {
            Some(0)
        } else {
            None
        }
    }
}
