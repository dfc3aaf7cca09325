use ethnum::I256;
use serde::Serialize;

use super::sieve::{for_each_prime_in_segment, BasePrimes, SieveConfig};
use crate::error::{Error, Result};
use crate::fixed::{ln_p_over_pm1, ln_u64, raw_to_f64, FixedInterval, FIXED_DIGITS};
use crate::highprec::IntervalReal;

/// Running sums over the first `beta` primes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MertensAccumulator {
    pub beta: u64,
    pub last_prime: u64,
    /// `sum log(p/(p-1))`
    pub logsum: FixedInterval,
    /// `theta(p_beta) = sum log p`
    pub theta: FixedInterval,
}

impl MertensAccumulator {
    #[inline]
    pub fn push(&mut self, p: u64) {
        let (llo, lhi) = ln_p_over_pm1(p);
        let t = ln_u64(p);
        self.beta += 1;
        self.last_prime = p;
        self.logsum.lo += llo;
        self.logsum.hi += lhi;
        self.theta.lo += t.lo;
        self.theta.hi += t.hi;
    }

    /// Concatenate the sums of a later run of primes.
    pub fn extend(&self, later: &MertensAccumulator) -> MertensAccumulator {
        if later.beta == 0 {
            return *self;
        }
        MertensAccumulator {
            beta: self.beta + later.beta,
            last_prime: later.last_prime,
            logsum: self.logsum.add(&later.logsum),
            theta: self.theta.add(&later.theta),
        }
    }

    pub fn logsum_interval(&self, digits: u32) -> IntervalReal {
        self.logsum.to_interval(digits)
    }

    pub fn theta_interval(&self, digits: u32) -> IntervalReal {
        self.theta.to_interval(digits)
    }

    /// Upper bound on the width of the log-sum enclosure.
    pub fn error_bound(&self) -> f64 {
        raw_to_f64(self.logsum.width()) * (1.0 + 1e-12)
    }

    pub fn theta_error_bound(&self) -> f64 {
        raw_to_f64(self.theta.width()) * (1.0 + 1e-12)
    }

    /// Per-term error bound in the log-sum. The widest term is p = 2, whose
    /// series has 128 nonzero terms and an enclosure 131 units wide.
    pub fn per_term_bound() -> f64 {
        132.0 * 2f64.powi(-128)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AccumulatorReport {
    pub beta: u64,
    pub last_prime: u64,
    pub logsum: IntervalReal,
    pub theta: IntervalReal,
    pub error_bound: f64,
}

impl MertensAccumulator {
    pub fn report(&self, digits: u32) -> AccumulatorReport {
        AccumulatorReport {
            beta: self.beta,
            last_prime: self.last_prime,
            logsum: self.logsum_interval(digits),
            theta: self.theta_interval(digits),
            error_bound: self.error_bound(),
        }
    }
}

/// Sums over the primes of one segment, with optional caps.
pub(crate) fn summarize_segment(
    j: u64,
    seg: u64,
    base: &BasePrimes,
    limit: u64,
    max_count: u64,
) -> MertensAccumulator {
    let mut acc = MertensAccumulator::default();
    let mut bits = Vec::new();
    for_each_prime_in_segment(j, seg, base, limit, &mut bits, |p| {
        if acc.beta >= max_count {
            return false;
        }
        acc.push(p);
        true
    });
    acc
}

/// Per-prime running states for one segment, starting after `start`.
pub(crate) fn segment_states(
    j: u64,
    seg: u64,
    base: &BasePrimes,
    start: &MertensAccumulator,
) -> Vec<MertensAccumulator> {
    let mut out = Vec::new();
    let mut cur = *start;
    let mut bits = Vec::new();
    for_each_prime_in_segment(j, seg, base, u64::MAX, &mut bits, |p| {
        cur.push(p);
        out.push(cur);
        true
    });
    out
}

/// How far to accumulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extent {
    /// All primes `<= x`.
    UpTo(u64),
    /// The first `beta` primes.
    Count(u64),
}

/// Log-sum and theta over a prefix of the primes.
///
/// Partial sums of segments are exact integers, so the result is the same
/// whatever the thread count or completion order.
pub fn accumulate(extent: Extent, cfg: &SieveConfig, digits: u32) -> Result<MertensAccumulator> {
    cfg.validate()?;
    if digits < 30 {
        return Err(Error::invalid(format!("accumulate needs at least 30 digits, got {digits}")));
    }
    if digits > FIXED_DIGITS {
        return Err(Error::precision(
            format!("the fixed-point accumulator resolves {FIXED_DIGITS} digits, {digits} requested"),
            digits,
        ));
    }
    let seg = cfg.segment_size;
    let (limit, count) = match extent {
        Extent::UpTo(x) => (x, u64::MAX),
        Extent::Count(b) => (u64::MAX, b),
    };
    let mut total = MertensAccumulator::default();
    let mut base = BasePrimes::default();
    let batch = (cfg.threads as u64 * 4).max(1);
    let mut j = 0u64;
    loop {
        if total.beta >= count || 2 * j * seg + 1 > limit {
            return Ok(total);
        }
        let js: Vec<u64> = (j..j + batch).collect();
        base.ensure(2 * (j + batch) * seg + 1);
        let remaining = count - total.beta;
        let sums = crate::par::with_threads(cfg.threads, || {
            crate::par::map_ordered(js, |jj| summarize_segment(jj, seg, &base, limit, remaining))
        });
        for s in sums {
            if total.beta + s.beta > count {
                // Recount the overshooting segment exactly.
                let part = summarize_segment(j, seg, &base, limit, count - total.beta);
                total = total.extend(&part);
                return Ok(total);
            }
            total = total.extend(&s);
            j += 1;
            if total.beta >= count {
                return Ok(total);
            }
        }
    }
}

/// Raw sums as `I256` pairs, for tests that compare states bit for bit.
pub fn raw_state(acc: &MertensAccumulator) -> [I256; 4] {
    [acc.logsum.lo, acc.logsum.hi, acc.theta.lo, acc.theta.hi]
}
