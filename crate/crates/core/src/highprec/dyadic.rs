//! Exact binary floating values `mant * 2^exp`.
//!
//! Everything the interval layer does reduces to exact operations on these
//! plus a single directed rounding step, which keeps outward rounding easy to
//! audit.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Round {
    Floor,
    Ceil,
}

/// `mant * 2^exp`, kept canonical: the mantissa is odd, or zero with `exp = 0`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mant: BigInt,
    exp: i64,
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sci_string(25))
    }
}

impl Dyadic {
    pub fn new(mant: BigInt, exp: i64) -> Self {
        let mut d = Dyadic { mant, exp };
        d.normalize();
        d
    }

    pub fn zero() -> Self {
        Dyadic {
            mant: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn from_int(v: impl Into<BigInt>) -> Self {
        Dyadic::new(v.into(), 0)
    }

    /// Exact conversion of a finite `f64`.
    pub fn from_f64(v: f64) -> Option<Self> {
        if !v.is_finite() {
            return None;
        }
        if v == 0.0 {
            return Some(Dyadic::zero());
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        Some(Dyadic::new(BigInt::from(m) * sign, e))
    }

    fn normalize(&mut self) {
        if self.mant.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.mant.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.mant >>= tz as usize;
            self.exp += tz as i64;
        }
    }

    pub fn mant(&self) -> &BigInt {
        &self.mant
    }

    pub fn exp(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.sign() == Sign::Minus
    }

    pub fn is_positive(&self) -> bool {
        self.mant.sign() == Sign::Plus
    }

    pub fn signum(&self) -> i32 {
        match self.mant.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    /// Position of the leading bit: `2^msb <= |x| < 2^(msb+1)`.
    pub fn msb(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.mant.bits() as i64 - 1 + self.exp)
        }
    }

    pub fn neg(&self) -> Self {
        Dyadic {
            mant: -&self.mant,
            exp: self.exp,
        }
    }

    pub fn abs(&self) -> Self {
        Dyadic {
            mant: self.mant.abs(),
            exp: self.exp,
        }
    }

    pub fn add(&self, other: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(other.exp);
        let a = &self.mant << ((self.exp - e) as usize);
        let b = &other.mant << ((other.exp - e) as usize);
        Dyadic::new(a + b, e)
    }

    pub fn sub(&self, other: &Dyadic) -> Dyadic {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Dyadic) -> Dyadic {
        Dyadic::new(&self.mant * &other.mant, self.exp + other.exp)
    }

    pub fn mul_pow2(&self, k: i64) -> Dyadic {
        if self.is_zero() {
            return self.clone();
        }
        Dyadic {
            mant: self.mant.clone(),
            exp: self.exp + k,
        }
    }

    /// Round to at most `bits` significant bits in the given direction.
    pub fn round(&self, bits: u64, dir: Round) -> Dyadic {
        let n = self.mant.bits();
        if n <= bits {
            return self.clone();
        }
        let shift = n - bits;
        let m = shift_round(&self.mant, shift, dir);
        Dyadic::new(m, self.exp + shift as i64)
    }

    /// `round(x * 2^scale)` to an integer in the given direction.
    pub fn to_scaled_int(&self, scale: i64, dir: Round) -> BigInt {
        let e = self.exp + scale;
        if e >= 0 {
            &self.mant << (e as usize)
        } else {
            shift_round(&self.mant, (-e) as u64, dir)
        }
    }

    /// Quotient `a / b` rounded to `bits` significant bits.
    pub fn div(a: &Dyadic, b: &Dyadic, bits: u64, dir: Round) -> Dyadic {
        assert!(!b.is_zero(), "dyadic division by zero");
        if a.is_zero() {
            return Dyadic::zero();
        }
        // Scale the numerator so the integer quotient carries `bits + 2` bits.
        let shift = (bits as i64 + 2 + b.mant.bits() as i64 - a.mant.bits() as i64).max(0);
        let num = &a.mant << (shift as usize);
        let q = div_round(&num, &b.mant, dir);
        Dyadic::new(q, a.exp - b.exp - shift).round(bits, dir)
    }

    /// `num / den` rounded to `bits` significant bits.
    pub fn from_ratio(num: &BigInt, den: &BigInt, bits: u64, dir: Round) -> Dyadic {
        Dyadic::div(&Dyadic::from_int(num.clone()), &Dyadic::from_int(den.clone()), bits, dir)
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let n = self.mant.bits();
        let (m, e) = if n > 60 {
            let s = n - 60;
            (&self.mant >> (s as usize), self.exp + s as i64)
        } else {
            (self.mant.clone(), self.exp)
        };
        let mf = m.to_f64().unwrap_or(f64::NAN);
        if e > 2000 {
            return mf.signum() * f64::INFINITY;
        }
        if e < -2200 {
            return 0.0;
        }
        mf * 2f64.powi(e as i32)
    }

    /// Decimal rendering with `sig` significant digits (truncated toward zero).
    pub fn to_sci_string(&self, sig: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let neg = self.is_negative();
        let a = self.abs();
        // Estimate the decimal exponent, then fix it up exactly.
        let mut dexp = (a.msb().unwrap() as f64 * std::f64::consts::LOG10_2).floor() as i64;
        let digits_of = |dexp: i64| -> BigInt {
            // floor(|x| * 10^(sig-1-dexp))
            let p = sig as i64 - 1 - dexp;
            let scaled = if p >= 0 {
                a.mul(&Dyadic::from_int(BigInt::from(10u32).pow(p as u32)))
            } else {
                let den = Dyadic::from_int(BigInt::from(10u32).pow((-p) as u32));
                let q = Dyadic::div(&a, &den, (a.mant.bits() + 64).max(sig as u64 * 4 + 64), Round::Floor);
                q
            };
            scaled.to_scaled_int(0, Round::Floor)
        };
        let lower = BigInt::from(10u32).pow(sig as u32 - 1);
        let upper = &lower * 10u32;
        let mut d = digits_of(dexp);
        for _ in 0..4 {
            if d >= upper {
                dexp += 1;
                d = digits_of(dexp);
            } else if d < lower {
                dexp -= 1;
                d = digits_of(dexp);
            } else {
                break;
            }
        }
        let s = d.to_string();
        let (head, tail) = s.split_at(1);
        let mut out = String::new();
        if neg {
            out.push('-');
        }
        // Plain notation for moderate exponents, scientific otherwise.
        if (-6..=21).contains(&dexp) {
            if dexp >= 0 {
                let int_len = dexp as usize + 1;
                if int_len >= s.len() {
                    out.push_str(&s);
                    out.push_str(&"0".repeat(int_len - s.len()));
                } else {
                    out.push_str(&s[..int_len]);
                    out.push('.');
                    out.push_str(&s[int_len..]);
                }
            } else {
                out.push_str("0.");
                out.push_str(&"0".repeat((-dexp - 1) as usize));
                out.push_str(&s);
            }
        } else {
            out.push_str(head);
            if !tail.is_empty() {
                out.push('.');
                out.push_str(tail);
            }
            out.push_str(&format!("e{dexp}"));
        }
        out
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.signum(), other.signum());
        if sa != sb {
            return sa.cmp(&sb);
        }
        if sa == 0 {
            return Ordering::Equal;
        }
        // Same nonzero sign: compare magnitudes via leading bit first.
        let (ma, mb) = (self.msb().unwrap(), other.msb().unwrap());
        let mag = if ma != mb {
            ma.cmp(&mb)
        } else {
            let e = self.exp.min(other.exp);
            let a = self.mant.abs() << ((self.exp - e) as usize);
            let b = other.mant.abs() << ((other.exp - e) as usize);
            a.cmp(&b)
        };
        if sa > 0 {
            mag
        } else {
            mag.reverse()
        }
    }
}

/// `round(m / 2^shift)` in the given direction.
pub(crate) fn shift_round(m: &BigInt, shift: u64, dir: Round) -> BigInt {
    if shift == 0 {
        return m.clone();
    }
    let d = BigInt::one() << (shift as usize);
    div_round(m, &d, dir)
}

/// Integer quotient rounded in the given direction.
pub(crate) fn div_round(a: &BigInt, b: &BigInt, dir: Round) -> BigInt {
    match dir {
        Round::Floor => a.div_floor(b),
        Round::Ceil => -((-a).div_floor(b)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_and_ordering() {
        let a = Dyadic::new(BigInt::from(12), 0);
        assert_eq!(a.mant(), &BigInt::from(3));
        assert_eq!(a.exp(), 2);
        let b = Dyadic::from_f64(12.5).unwrap();
        assert!(a < b);
        assert!(b.neg() < a.neg());
        assert_eq!(Dyadic::from_f64(-0.75).unwrap().to_f64(), -0.75);
    }

    #[test]
    fn directed_rounding_brackets_value() {
        let x = Dyadic::new(BigInt::from(0b1011011), -3);
        let lo = x.round(3, Round::Floor);
        let hi = x.round(3, Round::Ceil);
        assert!(lo <= x && x <= hi);
        let nx = x.neg();
        assert!(nx.round(3, Round::Floor) <= nx && nx <= nx.round(3, Round::Ceil));
    }

    #[test]
    fn division_is_directed() {
        let one = Dyadic::from_int(1);
        let three = Dyadic::from_int(3);
        let lo = Dyadic::div(&one, &three, 64, Round::Floor);
        let hi = Dyadic::div(&one, &three, 64, Round::Ceil);
        assert!(lo < hi);
        assert!(lo.mul(&three) < one && hi.mul(&three) > one);
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(Dyadic::from_f64(0.5).unwrap().to_sci_string(3), "0.500");
        assert_eq!(Dyadic::from_int(5040).to_sci_string(4), "5040");
        assert_eq!(Dyadic::from_int(5040).to_sci_string(2), "5000");
        assert_eq!(Dyadic::from_f64(-0.00125).unwrap().to_sci_string(2), "-0.0012");
    }
}
