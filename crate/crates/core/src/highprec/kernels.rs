//! Point kernels for `ln` and `exp` with explicit error bookkeeping.
//!
//! Each kernel works on integers at a binary scale `w` (value `v * 2^-w`) and
//! returns an approximation together with a bound on its error in units of
//! `2^-w`. Every floor division contributes at most one unit; the bounds below
//! add those contributions up rather than estimating them.

use std::sync::Mutex;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::dyadic::{Dyadic, Round};
use crate::error::{Error, Result};

/// Cached `ln 2` at the highest scale requested so far.
static LN2_CACHE: Mutex<Option<(u64, BigInt, u64)>> = Mutex::new(None);

fn bit_len(v: u64) -> u64 {
    64 - v.leading_zeros() as u64
}

fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

/// `ln 2` at scale `w`: returns `(approx, err)` with `|ln2 * 2^w - approx| <= err`.
pub(crate) fn ln2_scaled(w: u64) -> (BigInt, u64) {
    {
        let cache = LN2_CACHE.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((cw, v, e)) = cache.as_ref() {
            if *cw >= w {
                let shift = (cw - w) as usize;
                if shift == 0 {
                    return (v.clone(), *e);
                }
                return (v >> shift, e.checked_shr(shift as u32).unwrap_or(0) + 2);
            }
        }
    }
    // ln 2 = 2 atanh(1/3) = 2 * sum 1 / ((2j+1) 3^(2j+1)).
    // q_j = floor(2^w / 3^(2j+1)) is exact through repeated floor division.
    let mut q: BigInt = (BigInt::one() << (w as usize)) / 3u32;
    let mut sum = BigInt::zero();
    let mut terms = 0u64;
    let mut j = 0u64;
    while !q.is_zero() {
        sum += &q / (2 * j + 1);
        terms += 1;
        q /= 9u32;
        j += 1;
    }
    // Each floor loses < 1 unit; the tail after q hits zero is < 9/8 unit.
    let approx = sum * 2u32;
    let err = 2 * (terms + 2);
    let mut cache = LN2_CACHE.lock().unwrap_or_else(|e| e.into_inner());
    let replace = cache.as_ref().map(|(cw, _, _)| *cw < w).unwrap_or(true);
    if replace {
        *cache = Some((w, approx.clone(), err));
    }
    (approx, err)
}

/// Natural log of a positive dyadic. Returns `(approx, err, w)` at scale `w`.
pub(crate) fn ln_scaled(x: &Dyadic, target_bits: u64) -> Result<(BigInt, u64, u64)> {
    if !x.is_positive() {
        return Err(Error::domain("ln", format!("{x:?} is not positive")));
    }
    let mut k = x.msb().unwrap();
    let guard = 24 + bit_len(k.unsigned_abs() + 2) + bit_len(target_bits) + 4;
    let w = target_bits + guard;
    let one = BigInt::one() << (w as usize);

    // r = x / 2^k in [1, 2); shift to [2/3, 4/3) when r > 4/3.
    let mut r = x.to_scaled_int(w as i64 - k, Round::Floor);
    if &r * 3u32 > &one * 4u32 {
        k += 1;
        r = x.to_scaled_int(w as i64 - k, Round::Floor);
    }
    // t = (r - 1) / (r + 1), |t| <= 1/5; |T - t 2^w| < 2.
    let t = floor_div(&((&r - &one) << (w as usize)), &(&r + &one));
    // t^2, error < 3 units.
    let t2 = floor_div(&(&t * &t), &one);
    let mut p = t.clone();
    let mut sum = t;
    let mut terms = 1u64;
    let mut j = 1u64;
    loop {
        p = (&p * &t2) / &one;
        if p.is_zero() {
            break;
        }
        sum += &p / (2 * j + 1);
        terms += 1;
        j += 1;
    }
    // Terms truncate toward zero so the series terminates when t < 0.
    // Per-term error <= 2 units, tail < 4 units; ln r = 2 atanh t.
    let ln_r = sum * 2u32;
    let err_r = 4 * (terms + 1) + 8;

    let (l2, e2) = ln2_scaled(w);
    let approx = ln_r + &l2 * k;
    let err = err_r + k.unsigned_abs() * e2 + 1;
    Ok((approx, err, w))
}

/// Rigorous enclosure of `ln x` with about `bits` bits of absolute accuracy.
pub(crate) fn ln_bounds(x: &Dyadic, bits: u64) -> Result<(Dyadic, Dyadic)> {
    let (approx, err, w) = ln_scaled(x, bits)?;
    let err = BigInt::from(err);
    let lo = Dyadic::new(&approx - &err, -(w as i64));
    let hi = Dyadic::new(&approx + &err, -(w as i64));
    Ok((lo, hi))
}

/// Rigorous enclosure of `exp x` with about `bits` bits of relative accuracy.
pub(crate) fn exp_bounds(x: &Dyadic, bits: u64) -> Result<(Dyadic, Dyadic)> {
    let xf = x.to_f64();
    if !xf.is_finite() || xf.abs() > 2f64.powi(40) {
        return Err(Error::domain("exp", format!("argument {xf:e} out of range")));
    }
    let k = (xf / std::f64::consts::LN_2).floor() as i64;
    let s0 = ((target_sqrt(bits) as f64) / 2.0).ceil() as u64;
    let s = s0.max(4);
    let guard = 32 + s + bit_len(k.unsigned_abs() + 2) + 2 * bit_len(bits + 64);
    let w = bits + guard;
    let one = BigInt::one() << (w as usize);

    let xs = x.to_scaled_int(w as i64, Round::Floor);
    let (l2, e2) = ln2_scaled(w);
    let r = xs - &l2 * k;
    let err_r = 1.0 + (k.unsigned_abs() as f64) * (e2 as f64);

    // r / 2^s
    let rs = r.div_floor(&(BigInt::one() << (s as usize)));
    let err_rs = err_r / 2f64.powi(s as i32) + 1.0;
    let rs_mag = rs.abs().to_f64().unwrap_or(f64::INFINITY) / 2f64.powi(w as i32);

    // Taylor series for exp(r / 2^s).
    let mut term = one.clone();
    let mut sum = one.clone();
    let mut err_t = 0.0f64;
    let mut err_sum = 0.0f64;
    let mut j = 1u64;
    loop {
        let prev_mag = term.abs().to_f64().unwrap_or(f64::INFINITY) / 2f64.powi(w as i32);
        term = (&term * &rs) / (&one * j);
        err_t = err_t * rs_mag / j as f64 + prev_mag * err_rs / j as f64 + 1.0;
        if term.is_zero() {
            // Remaining tail is bounded by twice the first omitted term.
            err_sum += 2.0 * (err_t + 1.0);
            break;
        }
        sum += &term;
        err_sum += err_t;
        j += 1;
    }

    // Square s times: exp(r) = exp(r / 2^s)^(2^s).
    let mut e = sum;
    let mut err = err_sum * (1.0 + 1e-12) + 1.0;
    for _ in 0..s {
        let mag = e.abs().to_f64().unwrap_or(f64::INFINITY) / 2f64.powi(w as i32);
        let unit = 2f64.powi(-(w as i32));
        e = floor_div(&(&e * &e), &one);
        err = (2.0 * (mag + err * unit) * err + err * err * unit) * (1.0 + 1e-12) + 1.0;
    }
    if !err.is_finite() || err > 2f64.powi(60) {
        return Err(Error::precision("exp error bound overflowed", (bits / 3) as u32 + 1));
    }
    let err = BigInt::from(err.ceil() as u64 + 1);
    let shift = k - w as i64;
    Ok((Dyadic::new(&e - &err, shift), Dyadic::new(&e + &err, shift)))
}

fn target_sqrt(bits: u64) -> u64 {
    (bits as f64).sqrt() as u64
}
