//! Euler's constant by the Brent–McMillan Bessel-function formula.
//!
//! With `U = sum (n^k/k!)^2 H_k` and `V = sum (n^k/k!)^2`, one has
//! `U/V - ln n - gamma = K0(2n)/I0(2n)`, which lies in `(0, pi e^(-4n))`.
//! Both truncated sums are evaluated as exact integers.

use std::sync::Mutex;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use super::dyadic::{Dyadic, Round};
use super::interval::{digits_to_bits, IntervalReal};
use crate::error::{Error, Result};

static GAMMA_CACHE: Mutex<Option<IntervalReal>> = Mutex::new(None);

/// Smallest precision accepted by [`euler_gamma`].
pub const MIN_GAMMA_DIGITS: u32 = 10;

/// Enclosure of Euler's constant with width at most `10^(1-digits)`.
pub fn euler_gamma(digits: u32) -> Result<IntervalReal> {
    if digits < MIN_GAMMA_DIGITS {
        return Err(Error::invalid(format!(
            "euler_gamma needs at least {MIN_GAMMA_DIGITS} digits, got {digits}"
        )));
    }
    {
        let cache = GAMMA_CACHE.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(g) = cache.as_ref() {
            if g.digits() >= digits {
                let g = g.clone();
                return Ok(IntervalReal::from_bounds(g.lo().clone(), g.hi().clone(), digits));
            }
        }
    }
    let g = compute_gamma(digits)?;
    let mut cache = GAMMA_CACHE.lock().unwrap_or_else(|e| e.into_inner());
    let replace = cache.as_ref().map(|c| c.digits() < digits).unwrap_or(true);
    if replace {
        *cache = Some(g.clone());
    }
    Ok(g)
}

fn compute_gamma(digits: u32) -> Result<IntervalReal> {
    let bits = digits_to_bits(digits) + 16;
    // e^(-4n) < 2^-(bits+8)
    let n = (((bits + 8) as f64) * std::f64::consts::LN_2 / 4.0).ceil() as u64 + 1;
    let kmax = (3.6 * n as f64).ceil() as u64 + 8;

    let mut kfact = BigInt::one();
    for k in 2..=kmax {
        kfact *= k;
    }
    let nb = BigInt::from(n);
    // u_k = n^k K!/k!, h_k = K! H_k, both exact integers.
    let mut u = kfact.clone();
    let mut h = BigInt::from(0);
    let mut a = BigInt::from(0);
    let mut b = u.clone() * &u;
    for k in 1..=kmax {
        u = u * &nb / k;
        h += &kfact / k;
        let u2 = &u * &u;
        a += &u2 * &h;
        b += u2;
    }
    // Tails past K, in the same integer units.
    let u2 = &u * &u;
    let tau_b = &u2 / 10u32 + 1u32;
    let tau_a = &u2 * (kmax + 1) * &kfact / 5u32 + 1u32;

    let w = digits + 12;
    let lo_r = BigRational::new(a.clone(), &kfact * (&b + &tau_b));
    let hi_r = BigRational::new(&a + &tau_a, &kfact * &b);
    let ratio_lo = IntervalReal::from_ratio(&lo_r, w);
    let ratio_hi = IntervalReal::from_ratio(&hi_r, w);
    let ratio = IntervalReal::from_exact_bounds(ratio_lo.lo().clone(), ratio_hi.hi().clone(), w);

    let ln_n = IntervalReal::from_int(n, w).ln()?;
    let g = ratio.sub(&ln_n);
    // Bessel correction lies in (0, pi e^(-4n)) and pi e^(-4n) < 2^-(bits+6).
    let corr = Dyadic::new(BigInt::one(), -((bits + 6) as i64));
    let lo = g.lo().sub(&corr);
    let bits_out = digits_to_bits(digits);
    Ok(IntervalReal::from_exact_bounds(
        lo.round(bits_out, Round::Floor),
        g.hi().round(bits_out, Round::Ceil),
        digits,
    ))
}

/// `e^gamma` at the given precision.
pub fn exp_gamma(digits: u32) -> Result<IntervalReal> {
    euler_gamma(digits + 4)?.exp().map(|x| x.with_digits(digits))
}
