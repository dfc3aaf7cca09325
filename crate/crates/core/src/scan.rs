//! Exhaustive range checks driven by a block sieve for `sigma(n)`.
//!
//! Each `n` is first compared in `f64`; anything whose relative margin falls
//! inside the guard band is recomputed with certified intervals.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::highprec::{compare_refining, Dyadic, euler_gamma, CertifiedOrder, IntervalReal};
use crate::primes::{isqrt, small_primes};

/// Largest `n` a scan accepts by default.
pub const DEFAULT_SCAN_CAP: u64 = 1_000_000_000;

/// Radius assumed for the floating-point evaluation (relative).
const FLOAT_RADIUS: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub block_size: u64,
    pub threads: usize,
    pub cap: u64,
    /// Relative margin below which a comparison is redone with intervals.
    pub guard: f64,
    /// Largest precision for escalated comparisons.
    pub max_digits: u32,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            block_size: 1 << 18,
            threads: crate::par::default_threads(),
            cap: DEFAULT_SCAN_CAP,
            guard: 1e-8,
            max_digits: 200,
        }
    }
}

impl ScanConfig {
    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads.max(1);
        self
    }

    fn check_range(&self, lo: u64, hi: u64) -> Result<()> {
        if lo < 2 || lo > hi {
            return Err(Error::invalid(format!("scan range must satisfy 2 <= lo <= hi, got [{lo}, {hi}]")));
        }
        if self.block_size == 0 {
            return Err(Error::invalid("block size must be positive"));
        }
        if hi > self.cap {
            return Err(Error::Capacity {
                detail: format!("hi = {hi} exceeds the scan cap {}", self.cap),
                resume: None,
            });
        }
        Ok(())
    }
}

/// `sigma(n)` for `n` in `[lo, hi]`, using `primes` (all primes up to `sqrt(hi)`).
pub fn sigma_block(lo: u64, hi: u64, primes: &[u64]) -> Vec<u64> {
    let len = (hi - lo + 1) as usize;
    let mut rem: Vec<u64> = (lo..=hi).collect();
    let mut sig = vec![1u64; len];
    for &p in primes {
        if p * p > hi {
            break;
        }
        let start = lo.div_ceil(p) * p;
        let mut m = start;
        while m <= hi {
            let i = (m - lo) as usize;
            let mut r = rem[i];
            let mut pk = 1u64;
            let mut s = 1u64;
            while r % p == 0 {
                r /= p;
                pk *= p;
                s += pk;
            }
            rem[i] = r;
            sig[i] *= s;
            m += p;
        }
    }
    for i in 0..len {
        if rem[i] > 1 {
            sig[i] *= rem[i] + 1;
        }
    }
    sig
}

/// Sequential stream of `(n, sigma(n))` over `[lo, hi]`.
pub struct SigmaSieve {
    next: u64,
    hi: u64,
    block: u64,
    primes: Vec<u64>,
    buf: std::vec::IntoIter<u64>,
    buf_start: u64,
    pos: u64,
}

impl Iterator for SigmaSieve {
    type Item = (u64, u64);

    fn next(&mut self) -> Option<(u64, u64)> {
        loop {
            if let Some(s) = self.buf.next() {
                let n = self.buf_start + self.pos;
                self.pos += 1;
                return Some((n, s));
            }
            if self.next > self.hi {
                return None;
            }
            let end = self.hi.min(self.next.saturating_add(self.block - 1));
            self.buf = sigma_block(self.next, end, &self.primes).into_iter();
            self.buf_start = self.next;
            self.pos = 0;
            self.next = end + 1;
        }
    }
}

pub fn sigma_sieve(lo: u64, hi: u64, cfg: &ScanConfig) -> Result<SigmaSieve> {
    cfg.check_range(lo, hi)?;
    Ok(SigmaSieve {
        next: lo,
        hi,
        block: cfg.block_size,
        primes: small_primes(isqrt(hi) + 1),
        buf: Vec::new().into_iter(),
        buf_start: lo,
        pos: 0,
    })
}

/// Which inequality a scan checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScanKind {
    /// `sigma(n)/n < e^gamma log log n`
    Robin,
    /// `sigma(n)/n < 1.0000005645 e^gamma log log n`, `n > 5040`
    Unconditional,
    /// odd `c`: `sigma(c)/c < (524288/1048575) e^gamma log log(2^19 c)`
    OddPart,
}

impl ScanKind {
    fn scale(self) -> BigRational {
        match self {
            ScanKind::Robin => BigRational::from_integer(1.into()),
            ScanKind::Unconditional => BigRational::new(10_000_005_645i64.into(), 10_000_000_000i64.into()),
            ScanKind::OddPart => BigRational::new(524_288.into(), 1_048_575.into()),
        }
    }

    /// `ln` of the argument of `log log`, in `f64`.
    fn ln_arg(self, n: u64) -> f64 {
        match self {
            ScanKind::OddPart => (n as f64).ln() + 19.0 * std::f64::consts::LN_2,
            _ => (n as f64).ln(),
        }
    }

    fn ln_arg_interval(self, n: u64, digits: u32) -> Result<IntervalReal> {
        let l = IntervalReal::from_int(n, digits).ln()?;
        Ok(match self {
            ScanKind::OddPart => l.add(&IntervalReal::from_int(2, digits).ln()?.mul_int(19)),
            _ => l,
        })
    }

    fn included(self, n: u64) -> bool {
        self != ScanKind::OddPart || n % 2 == 1
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RangeReport {
    pub kind: ScanKind,
    pub lo: u64,
    pub hi: u64,
    pub checked: u64,
    pub violators: Vec<u64>,
    /// Enclosure of the minimum of `rhs - sigma(n)/n` over the range.
    pub min_margin: Option<IntervalReal>,
    pub min_margin_at: Option<u64>,
    /// Comparisons redone with intervals.
    pub escalations: u64,
    /// Values left undecided at the largest precision.
    pub undecided: Vec<u64>,
    pub blocks: u64,
    #[serde(skip)]
    pub elapsed: std::time::Duration,
}

#[derive(Default)]
struct BlockResult {
    checked: u64,
    violators: Vec<u64>,
    undecided: Vec<u64>,
    escalations: u64,
    min: Option<(f64, u64)>,
}

/// Certified `sigma/n` against `scale e^gamma log log(arg)`.
fn certified(kind: ScanKind, n: u64, sigma: u64, scale: &BigRational, max_digits: u32) -> Result<CertifiedOrder> {
    let ratio = BigRational::new(BigInt::from(sigma), BigInt::from(n));
    compare_refining(32, max_digits, |d| {
        let lhs = IntervalReal::from_ratio(&ratio, d);
        let ll = kind.ln_arg_interval(n, d + 5)?;
        if ll.hi() <= &Dyadic::from_int(1) {
            // log log <= 0, the right-hand side is not positive
            return Ok((IntervalReal::from_int(1, d), IntervalReal::from_int(0, d)));
        }
        let rhs = euler_gamma(d + 5)?
            .exp()?
            .mul(&ll.ln()?)
            .mul(&IntervalReal::from_ratio(scale, d + 5))
            .with_digits(d);
        Ok((lhs, rhs))
    })
}

fn scan_block(kind: ScanKind, lo: u64, hi: u64, primes: &[u64], egamma: f64, scale: &BigRational, cfg: &ScanConfig) -> Result<BlockResult> {
    let sig = sigma_block(lo, hi, primes);
    let scale_f = crate::arith::ExactRatio(scale.clone()).to_f64() * egamma;
    let mut out = BlockResult::default();
    for (i, &s) in sig.iter().enumerate() {
        let n = lo + i as u64;
        if !kind.included(n) {
            continue;
        }
        out.checked += 1;
        let lhs = s as f64 / n as f64;
        let l = kind.ln_arg(n);
        let rhs = if l > 0.0 { scale_f * l.ln() } else { f64::NEG_INFINITY };
        let margin = rhs - lhs;
        if out.min.is_none_or(|(m, _)| margin < m) {
            out.min = Some((margin, n));
        }
        if rhs.is_finite() && (margin / rhs.abs().max(lhs)).abs() < cfg.guard {
            out.escalations += 1;
            match certified(kind, n, s, scale, cfg.max_digits)? {
                CertifiedOrder::Less => {}
                CertifiedOrder::Greater => out.violators.push(n),
                CertifiedOrder::Undecided => out.undecided.push(n),
            }
        } else if margin <= 0.0 {
            out.violators.push(n);
        }
    }
    Ok(out)
}

/// Certified `rhs - sigma(n)/n` for a single `n`.
fn margin_at(kind: ScanKind, n: u64, scale: &BigRational, digits: u32) -> Result<Option<IntervalReal>> {
    let ll = kind.ln_arg_interval(n, digits + 5)?;
    if !ll.lo().is_positive() {
        return Ok(None);
    }
    let lnl = ll.ln()?;
    let rhs = euler_gamma(digits + 5)?
        .exp()?
        .mul(&lnl)
        .mul(&IntervalReal::from_ratio(scale, digits + 5));
    let sigma = crate::arith::sigma_u64(n);
    let lhs = IntervalReal::from_ratio(&BigRational::new(BigInt::from(sigma), BigInt::from(n)), digits + 5);
    Ok(Some(rhs.sub(&lhs).with_digits(digits)))
}

/// Check `kind` over every `n` in `[lo, hi]`.
pub fn scan(kind: ScanKind, lo: u64, hi: u64, cfg: &ScanConfig) -> Result<RangeReport> {
    let started = std::time::Instant::now();
    cfg.check_range(lo, hi)?;
    if kind == ScanKind::Unconditional && lo <= 5040 {
        return Err(Error::domain("unconditional bound scan", format!("range must start above 5040, got {lo}")));
    }
    let primes = small_primes(isqrt(hi) + 1);
    let scale = kind.scale();
    let egamma = euler_gamma(30)?.exp()?.mid_f64();
    let nblocks = (hi - lo) / cfg.block_size + 1;
    let batch = (cfg.threads as u64 * 4).max(1);
    let mut total = BlockResult::default();
    let mut b = 0;
    while b < nblocks {
        let ids: Vec<u64> = (b..nblocks.min(b + batch)).collect();
        let results = crate::par::with_threads(cfg.threads, || {
            crate::par::map_ordered(ids, |k| {
                let s = lo + k * cfg.block_size;
                let e = hi.min(s + cfg.block_size - 1);
                scan_block(kind, s, e, &primes, egamma, &scale, cfg)
            })
        });
        for r in results {
            let r = r?;
            total.checked += r.checked;
            total.violators.extend(r.violators);
            total.undecided.extend(r.undecided);
            total.escalations += r.escalations;
            if let Some((m, n)) = r.min {
                if total.min.is_none_or(|(tm, _)| m < tm) {
                    total.min = Some((m, n));
                }
            }
        }
        b += batch;
    }
    // The float minimiser is certified; the true minimum may sit at another n
    // whose float margin was within the error radius, so widen downwards.
    let (min_margin, min_at) = match total.min {
        Some((m, n)) => match margin_at(kind, n, &scale, 40)? {
            Some(c) => {
                let slack = FLOAT_RADIUS * 64.0 * m.abs().max(1.0);
                let lo_f = Dyadic::from_f64(m - slack).ok_or_else(|| Error::invalid("non-finite margin"))?;
                let lo_b = lo_f.min(c.lo().clone());
                (Some(IntervalReal::from_exact_bounds(lo_b, c.hi().clone(), 40)), Some(n))
            }
            None => (None, Some(n)),
        },
        None => (None, None),
    };
    Ok(RangeReport {
        kind,
        lo,
        hi,
        checked: total.checked,
        violators: total.violators,
        min_margin,
        min_margin_at: min_at,
        escalations: total.escalations,
        undecided: total.undecided,
        blocks: nblocks,
        elapsed: started.elapsed(),
    })
}

/// Robin's inequality over `[lo, hi]`.
pub fn robin_scan(lo: u64, hi: u64, cfg: &ScanConfig) -> Result<RangeReport> {
    scan(ScanKind::Robin, lo, hi, cfg)
}

/// The unconditional bound over `[lo, hi]`, `lo > 5040`.
pub fn unconditional_scan(lo: u64, hi: u64, cfg: &ScanConfig) -> Result<RangeReport> {
    scan(ScanKind::Unconditional, lo, hi, cfg)
}

/// The odd-part bound over the odd `c` in `[lo, hi]`.
pub fn odd_part_scan(lo: u64, hi: u64, cfg: &ScanConfig) -> Result<RangeReport> {
    if lo < 2 {
        // c = 1 has sigma(1)/1 = 1; the sieve starts at 2.
        let mut r = scan(ScanKind::OddPart, 2, hi.max(2), cfg)?;
        let one = crate::families::odd_part_bound_check(1)?;
        r.lo = 1;
        r.checked += 1;
        if one.verdict != crate::arith::Verdict::Holds {
            r.violators.insert(0, 1);
        }
        return Ok(r);
    }
    scan(ScanKind::OddPart, lo, hi, cfg)
}
