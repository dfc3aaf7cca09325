//! Plain big-integer fixed-point oracles, written without the library's
//! interval code. Values are `v / 2^BITS`; every routine is accurate to a few
//! hundred units in the last place, far below `2^-350`.

#![allow(dead_code)]

pub mod brute;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub const BITS: u32 = 400;

pub fn one() -> BigInt {
    BigInt::one() << BITS
}

pub fn from_ratio(r: &BigRational) -> BigInt {
    (r.numer() << BITS).div_floor(r.denom())
}

pub fn to_ratio(v: &BigInt) -> BigRational {
    BigRational::new(v.clone(), BigInt::one() << BITS)
}

pub fn mul(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b) >> BITS
}

pub fn div(a: &BigInt, b: &BigInt) -> BigInt {
    (a << BITS).div_floor(b)
}

/// `2 atanh(u)` for `|u| <= 1/3`.
fn two_atanh(u: &BigInt) -> BigInt {
    let u2 = mul(u, u);
    let mut pow = u.clone();
    let mut sum = BigInt::zero();
    let mut k = 1u32;
    while !pow.is_zero() {
        sum += &pow / k;
        pow = mul(&pow, &u2);
        k += 2;
    }
    sum * 2
}

pub fn ln2() -> BigInt {
    two_atanh(&(one() / 3))
}

/// Natural log of a positive rational.
pub fn ln(r: &BigRational) -> BigInt {
    assert!(r.is_positive());
    // r = m 2^e with m in [1, 2)
    let mut e = r.numer().bits() as i64 - r.denom().bits() as i64;
    let two = BigRational::from_integer(2.into());
    let scale = |e: i64| {
        if e >= 0 {
            two.pow(e as i32)
        } else {
            BigRational::one() / two.pow((-e) as i32)
        }
    };
    let mut m = r / scale(e);
    while m >= two {
        m /= &two;
        e += 1;
    }
    while m < BigRational::one() {
        m *= &two;
        e -= 1;
    }
    let u = (&m - BigRational::one()) / (&m + BigRational::one());
    two_atanh(&from_ratio(&u)) + ln2() * e
}

pub fn exp(x: &BigInt) -> BigInt {
    let l2 = ln2();
    let k = x.div_floor(&l2);
    let r = x - &k * &l2;
    let mut term = one();
    let mut sum = BigInt::zero();
    let mut n = 1u32;
    while !term.is_zero() {
        sum += &term;
        term = mul(&term, &r) / n;
        n += 1;
    }
    let k: i64 = k.try_into().unwrap();
    if k >= 0 {
        sum << (k as usize)
    } else {
        sum >> ((-k) as usize)
    }
}

/// Euler's constant by Euler-Maclaurin summation at N = 1024.
pub fn gamma() -> BigInt {
    let n = 1024i64;
    let mut h = BigInt::zero();
    for k in 1..=n {
        h += one() / k;
    }
    let mut g = h - ln2() * 10 - one() / (2 * n);
    // B_{2k} for k = 1..10
    let bern: [(i64, i64); 10] = [
        (1, 6),
        (-1, 30),
        (1, 42),
        (-1, 30),
        (5, 66),
        (-691, 2730),
        (7, 6),
        (-3617, 510),
        (43867, 798),
        (-174611, 330),
    ];
    for (i, &(a, b)) in bern.iter().enumerate() {
        let k = i as u32 + 1;
        let den = BigInt::from(b) * (2 * k) * BigInt::from(n).pow(2 * k);
        g += (BigInt::from(a) << BITS).div_floor(&den);
    }
    g
}

pub fn to_f64(v: &BigInt) -> f64 {
    let s = (v >> (BITS - 60)).to_string().parse::<f64>().unwrap();
    s / 2f64.powi(60)
}

/// Band `[v - tol, v + tol]` as rationals, `tol = 2^-k`.
pub fn band(v: &BigInt, k: u32) -> (BigRational, BigRational) {
    let tol = BigRational::new(BigInt::one(), BigInt::one() << k);
    let r = to_ratio(v);
    (&r - &tol, r + tol)
}

/// First beta whose primorial reaches n_beta, by a direct per-prime scan in
/// plain fixed point; also returns log log n_beta.
pub fn direct_beta(eps: &BigRational) -> (u64, BigInt) {
    let c = gamma() + ln(&(eps + BigRational::one()));
    let mut l = BigInt::zero();
    let mut t = BigInt::zero();
    let mut beta = 0u64;
    for p in 2u64.. {
        if !(2..p).take_while(|d| d * d <= p).all(|d| p % d != 0) {
            continue;
        }
        beta += 1;
        l += ln(&BigRational::new(p.into(), (p - 1).into()));
        t += ln(&BigRational::from_integer(p.into()));
        if beta < 2 {
            continue;
        }
        let loglog = exp(&(&l - &c));
        let lhs = ln(&to_ratio(&t));
        let gap = &lhs - &loglog;
        assert!(gap.abs() > (one() >> 200u32), "near tie at beta = {beta}");
        if gap.is_positive() {
            return (beta, loglog);
        }
    }
    unreachable!()
}
