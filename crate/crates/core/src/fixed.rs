//! Binary fixed point with 128 fractional bits, and certified enclosures on it.
//!
//! Sums of fixed-point values are exact integer additions, so a total does not
//! depend on the order in which partial sums are combined. Rounding happens
//! only inside the per-term kernels, each of which returns a floor/ceil pair.

use std::sync::OnceLock;

use ethnum::{I256, U256};
use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::highprec::{Dyadic, IntervalReal, Round};

/// Number of fractional bits.
pub const FRAC_BITS: u32 = 128;

/// Decimal digits the fixed-point layer resolves (2^-128 ~ 2.9e-39, kept with
/// a margin for the per-term error allowances).
pub const FIXED_DIGITS: u32 = 36;

const ONE_U: U256 = U256::from_words(1, 0);

/// Allowance (in units of 2^-128) for the `log1p` series in [`ln_u64`].
const LOG1P_SLACK: i64 = 48;

/// A certified enclosure `[lo, hi] * 2^-128`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FixedInterval {
    pub lo: I256,
    pub hi: I256,
}

impl Default for FixedInterval {
    fn default() -> Self {
        FixedInterval::ZERO
    }
}

impl FixedInterval {
    pub const ZERO: FixedInterval = FixedInterval {
        lo: I256::ZERO,
        hi: I256::ZERO,
    };

    pub fn new(lo: I256, hi: I256) -> Self {
        debug_assert!(lo <= hi);
        FixedInterval { lo, hi }
    }

    pub fn from_int(v: i64) -> Self {
        let r = I256::from(v) << FRAC_BITS;
        FixedInterval { lo: r, hi: r }
    }

    /// Enclosure of `num / den` for positive `den`.
    pub fn from_ratio_u128(num: u128, den: u128) -> Self {
        assert!(den > 0);
        let n = U256::from(num) << FRAC_BITS;
        let d = U256::from(den);
        let q = n / d;
        let ceil = if q * d == n { q } else { q + 1 };
        FixedInterval {
            lo: q.as_i256(),
            hi: ceil.as_i256(),
        }
    }

    /// Outward conversion from an arbitrary-precision enclosure.
    pub fn from_interval(x: &IntervalReal) -> Self {
        FixedInterval {
            lo: bigint_to_i256(&x.lo().to_scaled_int(FRAC_BITS as i64, Round::Floor)),
            hi: bigint_to_i256(&x.hi().to_scaled_int(FRAC_BITS as i64, Round::Ceil)),
        }
    }

    /// Exact conversion (the endpoints are dyadic already).
    pub fn to_interval(&self, digits: u32) -> IntervalReal {
        IntervalReal::from_exact_bounds(raw_to_dyadic(self.lo), raw_to_dyadic(self.hi), digits)
    }

    pub fn add(&self, o: &FixedInterval) -> Self {
        FixedInterval {
            lo: self.lo + o.lo,
            hi: self.hi + o.hi,
        }
    }

    pub fn sub(&self, o: &FixedInterval) -> Self {
        FixedInterval {
            lo: self.lo - o.hi,
            hi: self.hi - o.lo,
        }
    }

    pub fn mul_int(&self, k: i64) -> Self {
        let k = I256::from(k);
        let (a, b) = (self.lo * k, self.hi * k);
        FixedInterval {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    /// Product of two non-negative enclosures.
    pub fn mul_nonneg(&self, o: &FixedInterval) -> Self {
        assert!(self.lo >= 0 && o.lo >= 0, "mul_nonneg needs non-negative operands");
        FixedInterval {
            lo: mul_raw(self.lo.as_u256(), o.lo.as_u256(), false).as_i256(),
            hi: mul_raw(self.hi.as_u256(), o.hi.as_u256(), true).as_i256(),
        }
    }

    pub fn width(&self) -> I256 {
        self.hi - self.lo
    }

    pub fn mid_f64(&self) -> f64 {
        (raw_to_f64(self.lo) + raw_to_f64(self.hi)) / 2.0
    }

    pub fn lo_f64(&self) -> f64 {
        raw_to_f64(self.lo)
    }

    pub fn hi_f64(&self) -> f64 {
        raw_to_f64(self.hi)
    }

    /// Natural log of a positive enclosure.
    pub fn ln(&self) -> Result<FixedInterval> {
        if self.lo <= 0 {
            return Err(Error::domain("ln", format!("fixed enclosure {self:?} not positive")));
        }
        Ok(FixedInterval {
            lo: ln_raw(self.lo.as_u256())?.lo,
            hi: ln_raw(self.hi.as_u256())?.hi,
        })
    }

    /// `exp` of an enclosure inside `[-40, 40]`.
    pub fn exp(&self) -> Result<FixedInterval> {
        let bound = I256::from(40i64) << FRAC_BITS;
        if self.lo < -bound || self.hi > bound {
            return Err(Error::domain("exp", format!("fixed enclosure {self:?} outside [-40, 40]")));
        }
        Ok(FixedInterval {
            lo: exp_raw(self.lo, false),
            hi: exp_raw(self.hi, true),
        })
    }

    /// `fx128:<lo>:<hi>` with raw decimal integers.
    pub fn encode(&self) -> String {
        format!("fx128:{}:{}", self.lo, self.hi)
    }

    pub fn decode(s: &str) -> Result<Self> {
        let bad = || Error::Checkpoint(format!("bad fixed-point field {s:?}"));
        let rest = s.strip_prefix("fx128:").ok_or_else(bad)?;
        let (a, b) = rest.split_once(':').ok_or_else(bad)?;
        let lo: I256 = a.parse().map_err(|_| bad())?;
        let hi: I256 = b.parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        Ok(FixedInterval { lo, hi })
    }
}

pub fn raw_to_f64(r: I256) -> f64 {
    r.as_f64() / 2f64.powi(FRAC_BITS as i32)
}

pub fn raw_to_dyadic(r: I256) -> Dyadic {
    Dyadic::new(i256_to_bigint(r), -(FRAC_BITS as i64))
}

pub fn i256_to_bigint(r: I256) -> BigInt {
    BigInt::from_signed_bytes_le(&r.to_le_bytes())
}

/// Panics if the value does not fit; callers stay far inside the range.
pub fn bigint_to_i256(v: &BigInt) -> I256 {
    let mut bytes = v.to_signed_bytes_le();
    assert!(bytes.len() <= 32, "value does not fit in 256 bits");
    let fill = if v.sign() == num_bigint::Sign::Minus { 0xff } else { 0 };
    bytes.resize(32, fill);
    I256::from_le_bytes(bytes.try_into().unwrap())
}

/// `floor` or `ceil` of `a * b / 2^128` for `a < 2^190`.
fn mul_raw(a: U256, b: U256, ceil: bool) -> U256 {
    debug_assert!(a.leading_zeros() >= 66);
    let (bh, bl) = b.into_words();
    let m = U256::from(u64::MAX);
    let limbs = [bl & u64::MAX as u128, bl >> 64, bh & u64::MAX as u128, bh >> 64];
    let x = a * U256::from(limbs[0]);
    let y = a * U256::from(limbs[1]);
    let mid = (x >> 64) + y;
    let mut r = (mid >> 64) + a * U256::from(limbs[2]) + ((a * U256::from(limbs[3])) << 64);
    if ceil && ((x & m) != U256::ZERO || (mid & m) != U256::ZERO) {
        r += 1;
    }
    r
}

#[inline]
fn mulhi(a: u128, b: u128) -> u128 {
    const M: u128 = u64::MAX as u128;
    let (a1, a0) = (a >> 64, a & M);
    let (b1, b0) = (b >> 64, b & M);
    let (x, y) = (a0 * b1, a1 * b0);
    let mid = ((a0 * b0) >> 64) + (x & M) + (y & M);
    a1 * b1 + (x >> 64) + (y >> 64) + (mid >> 64)
}

/// `ln a` for `0 < a < 2^16`, built from prime logarithms.
fn ln_table() -> &'static [FixedInterval] {
    static TABLE: OnceLock<Vec<FixedInterval>> = OnceLock::new();
    TABLE.get_or_init(|| {
        const N: usize = 1 << 16;
        let mut spf = vec![0u32; N];
        for i in 2..N {
            if spf[i] == 0 {
                let mut j = i;
                while j < N {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        let mut t = vec![FixedInterval::ZERO; N];
        for a in 2..N {
            let p = spf[a] as usize;
            if p == a {
                let l = IntervalReal::from_int(a as u64, 48)
                    .ln()
                    .expect("ln of a positive integer");
                t[a] = FixedInterval::from_interval(&l);
            } else {
                t[a] = t[p].add(&t[a / p]);
            }
        }
        t
    })
}

/// Enclosure of `ln 2`.
pub fn ln2() -> FixedInterval {
    ln_table()[2]
}

/// `k ln 2` for `-256 <= k <= 256`.
fn ln2_multiple(k: i64) -> FixedInterval {
    static TABLE: OnceLock<Vec<FixedInterval>> = OnceLock::new();
    let t = TABLE.get_or_init(|| (-256..=256).map(|k| ln2().mul_int(k)).collect());
    t[(k + 256) as usize]
}

/// Series for `log1p(u)`, `u = uf * 2^-128 < 2^-15`. Returns the approximate
/// raw value; the error is below [`LOG1P_SLACK`] units.
#[inline]
fn log1p_small(uf: u128) -> I256 {
    let mut pow = uf;
    let mut acc = I256::from(uf);
    let mut k = 2u128;
    loop {
        pow = mulhi(pow, uf);
        if pow == 0 {
            break;
        }
        let q = if pow >> 64 == 0 {
            (pow as u64 / k as u64) as u128
        } else if k.is_power_of_two() {
            pow >> k.trailing_zeros()
        } else {
            pow / k
        };
        let term = I256::from(q);
        if k % 2 == 0 {
            acc -= term;
        } else {
            acc += term;
        }
        k += 1;
    }
    acc
}

/// Certified `ln p` for a positive 64-bit integer.
pub fn ln_u64(p: u64) -> FixedInterval {
    assert!(p > 0, "ln of zero");
    let t = ln_table();
    if p < (1 << 16) {
        return t[p as usize];
    }
    let bl = 64 - p.leading_zeros();
    let s = bl - 16;
    let a = p >> s;
    let r = p - (a << s);
    // u = r / (a 2^s) < 1/a <= 2^-15
    let uf = ((r as u128) << (128 - s)) / a as u128;
    let l = log1p_small(uf);
    let base = t[a as usize].add(&ln2_multiple(s as i64));
    let slack = I256::from(LOG1P_SLACK);
    FixedInterval {
        lo: base.lo + l - slack,
        hi: base.hi + l + slack + 1,
    }
}

/// Certified `ln x` for a positive raw fixed-point value `x * 2^-128`.
fn ln_raw(x: U256) -> Result<FixedInterval> {
    let bl = 256 - x.leading_zeros();
    if bl < 16 {
        return Err(Error::precision(
            format!("ln argument below fixed-point resolution: {x}"),
            FIXED_DIGITS + 1,
        ));
    }
    let s = bl - 16;
    let a = (x >> s).as_u64();
    let r = x - (U256::from(a) << s);
    let uf = if s <= 128 {
        ((r << (128 - s)) / U256::from(a)).as_u128()
    } else {
        ((r >> (s - 128)) / U256::from(a)).as_u128()
    };
    let l = log1p_small(uf);
    let t = ln_table();
    let base = t[a as usize].add(&ln2_multiple(s as i64 - FRAC_BITS as i64));
    let slack = I256::from(LOG1P_SLACK + 2);
    Ok(FixedInterval {
        lo: base.lo + l - slack,
        hi: base.hi + l + slack + 1,
    })
}

/// Certified `ln(p / (p - 1)) = sum_k 1/(k p^k)` for `p >= 2`.
///
/// `r_k = floor(2^128 / p^k)` is exact by nested floors. Each `r_k / k` loses
/// under one unit, and the tail beyond the last nonzero `r_k` is under two.
#[inline]
pub fn ln_p_over_pm1(p: u64) -> (I256, I256) {
    debug_assert!(p >= 2);
    let pw = p as u128;
    // floor(2^128 / p) = floor((2^128 - 1) / p) unless p is a power of two.
    let mut r = if p.is_power_of_two() {
        1u128 << (128 - p.trailing_zeros())
    } else {
        u128::MAX / pw
    };
    let mut sum = U256::ZERO;
    let mut k = 1u128;
    while r != 0 {
        sum += U256::from(r / k);
        r /= pw;
        k += 1;
    }
    let lo = sum.as_i256();
    (lo, lo + I256::from(k + 2))
}

/// Floor (or ceil) of `exp(x)` for a raw `x`, within a few units.
///
/// `x = k ln 2 + r` with `0 <= r < 2 ln 2`; Taylor terms for `e^r` are all
/// positive, so truncating each one gives a lower bound and rounding each up
/// plus a tail allowance gives an upper one.
fn exp_raw(x: I256, upper: bool) -> I256 {
    let l2 = ln2();
    let mut k = (raw_to_f64(x) / std::f64::consts::LN_2).floor() as i64 - 1;
    let reduce = |k: i64| -> I256 {
        let m = ln2().mul_int(k);
        if upper { x - m.lo } else { x - m.hi }
    };
    let mut r = reduce(k);
    while r < 0 {
        k -= 1;
        r = reduce(k);
    }
    while r >= l2.lo * 2 {
        k += 1;
        r = reduce(k);
    }
    let r = r.as_u256();
    let mut term = ONE_U;
    let mut sum = ONE_U;
    let mut j = 1u64;
    loop {
        term = mul_raw(term, r, upper);
        let d = U256::from(j);
        term = if upper { (term + d - 1) / d } else { term / d };
        sum += term;
        j += 1;
        if j > 4 && term <= U256::ONE {
            break;
        }
    }
    if upper {
        // tail after a term <= 1 unit with ratio r/j < 1/2
        sum += 2;
    }
    let s = sum.as_i256();
    if k >= 0 {
        s << k as u32
    } else if upper {
        let sh = (-k) as u32;
        (s + ((I256::ONE << sh) - 1)) >> sh
    } else {
        s >> (-k) as u32
    }
}

/// Certified enclosure of `exp(x)` through the arbitrary-precision layer.
pub fn exp_interval(x: &FixedInterval, digits: u32) -> Result<IntervalReal> {
    x.to_interval(digits).exp()
}

/// Exact `2^128`.
pub fn one_raw() -> I256 {
    ONE_U.as_i256()
}
