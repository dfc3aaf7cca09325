//! Families of integers for which Robin's inequality is known to hold, the
//! `nu_2` threshold, the odd-part and unconditional bounds, and exact checks of
//! the constants behind them.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{robin_check_scaled, sigma_over_n, Factorization, RobinOutcome, Verdict};
use crate::error::{Error, Result};
use crate::highprec::{compare, compare_refining, exp_gamma, CertifiedOrder, IntervalReal};

/// Exponent `1048576/1048575` in the threshold.
fn exponent() -> BigRational {
    BigRational::new(1_048_576.into(), 1_048_575.into())
}

/// `1.0000005645`
pub fn unconditional_constant() -> BigRational {
    BigRational::new(10_000_005_645i64.into(), 10_000_000_000i64.into())
}

/// `524288/1048575`
pub fn odd_part_constant() -> BigRational {
    BigRational::new(524_288.into(), 1_048_575.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Witness {
    Nu2AtMost19,
    Nu3AtMost12,
    Nu5AtMost7,
    Nu7AtMost6,
    Nu11AtMost5,
    /// `nu_2(n)` exceeds the ceiled threshold of the odd part.
    Nu2AboveThreshold,
    /// `n <= 10^(10^10)`, covered by the verification on colossally abundant
    /// numbers. Listed for completeness; `classify` never evaluates it.
    BelowVerifiedRange,
}

#[derive(Debug, Clone, Serialize)]
pub struct Nu2Threshold {
    /// `((log 2^19 c)^(1048576/1048575) - log c) / log 2`
    pub rhs: IntervalReal,
    /// Least `k` with `k > rhs`.
    pub minimal_k: u64,
    /// Least `k` with `k > ceil(rhs)`.
    pub ceiled_k: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyVerdict {
    pub factorization: Factorization,
    pub guaranteed: bool,
    pub witnesses: Vec<Witness>,
    pub nu2: u64,
    pub threshold: Nu2Threshold,
}

/// `rhs` of the threshold from an enclosure of `log c` at `d` digits.
fn threshold_rhs(ln_c: &IntervalReal, d: u32) -> Result<IntervalReal> {
    let ln2 = IntervalReal::from_int(2, d).ln()?;
    let x = ln2.mul_int(19).add(ln_c);
    let p = x.pow(&IntervalReal::from_ratio(&exponent(), d))?;
    p.sub(ln_c).div(&ln2)
}

fn threshold_from_log(ln_c: &dyn Fn(u32) -> Result<IntervalReal>, digits: u32) -> Result<Nu2Threshold> {
    let mut d = 30u32.min(digits.max(10));
    loop {
        let rhs = threshold_rhs(&ln_c(d + 10)?, d + 10)?.with_digits(d);
        let (lo, hi) = rhs.floor_bounds();
        if lo == hi {
            // rhs is not an integer, so k > rhs iff k >= floor + 1
            let fl = lo.to_u64().ok_or_else(|| Error::invalid("threshold out of range"))?;
            return Ok(Nu2Threshold {
                rhs,
                minimal_k: fl + 1,
                ceiled_k: fl + 2,
            });
        }
        if d >= digits {
            return Err(Error::precision(
                format!("threshold {} sits on an integer boundary", rhs.midpoint_string(20)),
                digits * 2,
            ));
        }
        d = (d * 2).min(digits);
    }
}

/// Threshold for an odd `c >= 1`.
pub fn nu2_threshold(c: &BigUint, digits: u32) -> Result<Nu2Threshold> {
    if c.is_zero() || c.is_even() {
        return Err(Error::invalid(format!("threshold needs an odd positive c, got {c}")));
    }
    let ci = BigInt::from(c.clone());
    threshold_from_log(&|d| IntervalReal::from_int(ci.clone(), d).ln(), digits)
}

/// Threshold for an odd `c` given in factored form.
pub fn nu2_threshold_factored(c: &Factorization, digits: u32) -> Result<Nu2Threshold> {
    if c.nu(2) > 0 {
        return Err(Error::invalid(format!("threshold needs an odd c, got {c}")));
    }
    threshold_from_log(&|d| c.ln_value(d), digits)
}

/// Certified `k log 2 > (log 2^19 c)^(1048576/1048575) - log c`.
pub fn nu2_condition_holds(k: u64, c: &BigUint, digits: u32) -> Result<bool> {
    let ci = BigInt::from(c.clone());
    let ord = compare_refining(30, digits, |d| {
        let rhs = threshold_rhs(&IntervalReal::from_int(ci.clone(), d + 10).ln()?, d + 10)?;
        Ok((IntervalReal::from_int(k, d + 10), rhs))
    })?;
    match ord {
        CertifiedOrder::Greater => Ok(true),
        CertifiedOrder::Less => Ok(false),
        CertifiedOrder::Undecided => Err(Error::precision(format!("k = {k} on the threshold"), digits * 2)),
    }
}

fn above_5040(f: &Factorization) -> bool {
    match f.value_u128() {
        Some(v) => v > 5040,
        None => true,
    }
}

/// Evaluate every family condition for `n > 5040`.
pub fn classify(f: &Factorization, digits: u32) -> Result<FamilyVerdict> {
    if !above_5040(f) {
        return Err(Error::domain("classify", format!("n = {f} is not above 5040")));
    }
    let mut w = Vec::new();
    let nu2 = f.nu(2);
    let checks = [
        (2u128, 19u64, Witness::Nu2AtMost19),
        (3, 12, Witness::Nu3AtMost12),
        (5, 7, Witness::Nu5AtMost7),
        (7, 6, Witness::Nu7AtMost6),
        (11, 5, Witness::Nu11AtMost5),
    ];
    for (p, bound, tag) in checks {
        if f.nu(p) <= bound {
            w.push(tag);
        }
    }
    let threshold = nu2_threshold_factored(&f.odd_part(), digits)?;
    if nu2 >= threshold.ceiled_k {
        w.push(Witness::Nu2AboveThreshold);
    }
    Ok(FamilyVerdict {
        factorization: f.clone(),
        guaranteed: !w.is_empty(),
        witnesses: w,
        nu2,
        threshold,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundOutcome {
    pub verdict: Verdict,
    pub lhs: IntervalReal,
    pub rhs: IntervalReal,
    pub digits_used: u32,
}

/// `sigma(c)/c < (524288/1048575) e^gamma log log(2^19 c)` for odd `c`.
pub fn odd_part_bound_check(c: u64) -> Result<BoundOutcome> {
    odd_part_bound_check_factored(&crate::arith::factorize_u128(c as u128), 200)
}

pub fn odd_part_bound_check_factored(c: &Factorization, digits: u32) -> Result<BoundOutcome> {
    if c.nu(2) > 0 {
        return Err(Error::invalid(format!("odd-part bound needs an odd c, got {c}")));
    }
    let ratio = sigma_over_n(c);
    let k = odd_part_constant();
    let mut last = None;
    let ord = compare_refining(30, digits, |d| {
        let w = d + 8;
        let ln2 = IntervalReal::from_int(2, w).ln()?;
        let ll = ln2.mul_int(19).add(&c.ln_value(w)?).ln()?;
        let rhs = exp_gamma(w)?.mul(&ll).mul(&IntervalReal::from_ratio(&k, w)).with_digits(d);
        let lhs = ratio.to_interval(d);
        last = Some((lhs.clone(), rhs.clone(), d));
        Ok((lhs, rhs))
    })?;
    let (lhs, rhs, d) = last.expect("evaluated at least once");
    Ok(BoundOutcome {
        verdict: verdict_of(ord),
        lhs,
        rhs,
        digits_used: d,
    })
}

fn verdict_of(ord: CertifiedOrder) -> Verdict {
    match ord {
        CertifiedOrder::Less => Verdict::Holds,
        CertifiedOrder::Greater => Verdict::Fails,
        CertifiedOrder::Undecided => Verdict::Undecided,
    }
}

/// `sigma(n)/n < 1.0000005645 e^gamma log log n` for `n > 5040`.
pub fn unconditional_bound_check(f: &Factorization, digits: u32) -> Result<RobinOutcome> {
    if !above_5040(f) {
        return Err(Error::domain("unconditional bound", format!("n = {f} is not above 5040")));
    }
    robin_check_scaled(f, Some(&unconditional_constant()), digits)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub checks: Vec<ConstantCheck>,
    pub all_passed: bool,
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Decimal expansion of a positive rational rounded to `places` digits
/// (half up).
pub fn decimal_prefix(r: &BigRational, places: usize) -> String {
    let scale = BigInt::from(10).pow(places as u32);
    let two = BigInt::from(2);
    let t: BigInt = (r.numer() * &scale * &two + r.denom()).div_floor(&(r.denom() * &two));
    let (ip, fp) = t.div_rem(&scale);
    format!("{ip}.{:0>width$}", fp.to_string(), width = places)
}

/// Exact checks of the constant chains used in the proofs.
pub fn verify_proof_constants() -> ConstantsReport {
    let mut checks = Vec::new();
    let mut push = |name, passed, detail: String| checks.push(ConstantCheck { name, passed, detail });

    let a = BigInt::from(1_048_575) * 1_771_561;
    let b = BigInt::from(1_048_576) * 1_771_560;
    push(
        "(1048575/1048576)(1771561/1771560) < 1",
        a < b,
        format!("1048575*1771561 = {a} < 1048576*1771560 = {b}, difference {}", &b - &a),
    );

    push(
        "2^20 = 1048576 and 11^6 = 1771561",
        BigInt::from(2).pow(20) == BigInt::from(1_048_576) && BigInt::from(11).pow(6) == BigInt::from(1_771_561),
        "exact powers".into(),
    );

    // 1 - 1/5^8 < 1 - 1/7^7 < 1 - 1/3^13 < 1 - 1/11^6
    let pw = [(5i64, 8u32), (7, 7), (3, 13), (11, 6)];
    let vals: Vec<BigInt> = pw.iter().map(|&(p, a)| BigInt::from(p).pow(a)).collect();
    let factors: Vec<BigRational> = vals
        .iter()
        .map(|v| BigRational::one() - BigRational::new(BigInt::one(), v.clone()))
        .collect();
    push(
        "factor ordering for nu_3, nu_5, nu_7, nu_11",
        factors.windows(2).all(|w| w[0] < w[1]),
        format!("{} < {} < {} < {}", vals[0], vals[1], vals[2], vals[3]),
    );

    let chain: Vec<BigRational> = (2..=20)
        .map(|k| BigRational::one() - BigRational::new(BigInt::one(), BigInt::from(2).pow(k)))
        .collect();
    push(
        "(1 - 2^-2) < (1 - 2^-3) < ... < (1 - 2^-20)",
        chain.windows(2).all(|w| w[0] < w[1]),
        format!("{} strictly increasing terms", chain.len()),
    );

    let r = ratio(1_771_561, 1_771_560);
    push(
        "1771561/1771560 < 1.0000005645",
        r < unconditional_constant(),
        format!("1771561/1771560 = {}...", decimal_prefix(&r, 24)),
    );
    let prefix = decimal_prefix(&r, 18);
    push(
        "decimal prefix of 1771561/1771560",
        prefix == "1.000000564474248685",
        prefix,
    );

    let prod = ratio(1_771_560, 1_771_561) * ratio(1_771_561, 1_771_560);
    push(
        "(1771560/1771561)(1771561/1771560) = 1",
        prod.is_one(),
        format!("{prod}"),
    );

    // e^(e^x) < 10^(10^10)  <=>  x < log(10^10 log 10) = 10 log 10 + log log 10
    let d = 50;
    let ln10 = IntervalReal::from_int(10, d).ln().expect("ln 10");
    let bound = ln10.mul_int(10).add(&ln10.ln().expect("ln ln 10"));
    let x = IntervalReal::from_ratio(&ratio(23_762_143, 1_000_000), d);
    push(
        "e^(e^23.762143) < 10^(10^10)",
        compare(&x, &bound) == CertifiedOrder::Less,
        format!("23.762143 < log(10^10 log 10) = {}", bound.midpoint_string(12)),
    );

    let all_passed = checks.iter().all(|c| c.passed);
    ConstantsReport { checks, all_passed }
}
