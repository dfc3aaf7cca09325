//! Exceptions to `f(n) < e^gamma (1 + eps) log log n`, where
//! `f(n) = prod_{p <= p_omega(n)} p/(p-1)` depends on `n` only through `omega(n)`.
//!
//! For `omega(n) = alpha` the inequality fails exactly when `n <= n_alpha`,
//! `log log n_alpha = f_alpha / ((1 + eps) e^gamma)`. The table of `n_alpha`
//! ends at the first `beta` whose primorial reaches `n_beta`.

use std::io::Write;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::arith::{ExactRatio, Factorization};
use crate::error::{Error, Result};
use crate::highprec::{compare, compare_refining, euler_gamma, CertifiedOrder, IntervalReal};
use crate::primes::{small_primes, PrimeStream, MIN_SEGMENT};

/// Rows computed by [`build_beta_table`] before giving up.
pub const DEFAULT_MAX_ROWS: u64 = 200_000;

/// Lowest precision the refinement loops start from.
const START_DIGITS: u32 = 30;

#[derive(Debug, Clone, Serialize)]
pub struct BetaRow {
    pub alpha: u64,
    pub prime: u64,
    pub logsum: IntervalReal,
    pub loglog_n: IntervalReal,
}

#[derive(Debug, Clone, Serialize)]
pub struct BetaTable {
    pub epsilon: ExactRatio,
    pub digits: u32,
    pub rows: Vec<BetaRow>,
    /// `None` when the table is a prefix that stops before the crossing.
    pub beta_max: Option<u64>,
}

impl BetaTable {
    pub fn row(&self, alpha: u64) -> Option<&BetaRow> {
        self.rows.get((alpha as usize).checked_sub(1)?)
    }

    /// Enclosure of `n_alpha`.
    pub fn n_alpha(&self, alpha: u64) -> Result<IntervalReal> {
        let row = self
            .row(alpha)
            .ok_or_else(|| Error::invalid(format!("alpha = {alpha} outside the table")))?;
        row.loglog_n.exp()?.exp()
    }

    /// SHA-256 over the row enclosures, hex encoded.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("eps={}\n", self.epsilon));
        for r in &self.rows {
            h.update(format!(
                "{},{},{:?},{:?},{:?},{:?}\n",
                r.alpha,
                r.prime,
                r.logsum.lo(),
                r.logsum.hi(),
                r.loglog_n.lo(),
                r.loglog_n.hi()
            ));
        }
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn check_epsilon(eps: &ExactRatio) -> Result<()> {
    if !eps.0.is_positive() || eps.0 >= BigRational::one() {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// `ln((1 + eps) e^gamma)`.
fn shift_constant(eps: &ExactRatio, digits: u32) -> Result<IntervalReal> {
    let one_plus = IntervalReal::from_ratio(&(&eps.0 + BigRational::one()), digits);
    Ok(euler_gamma(digits)?.add(&one_plus.ln()?))
}

/// Full table up to and including `beta_max`.
pub fn build_beta_table(eps: &ExactRatio, digits: u32) -> Result<BetaTable> {
    build_table(eps, digits, DEFAULT_MAX_ROWS, true)
}

/// Full table, refusing with a capacity error past `max_rows` rows.
pub fn build_beta_table_with(eps: &ExactRatio, digits: u32, max_rows: u64) -> Result<BetaTable> {
    build_table(eps, digits, max_rows, true)
}

/// The first `rows` rows (or fewer, if the crossing comes first).
pub fn beta_table_prefix(eps: &ExactRatio, digits: u32, rows: u64) -> Result<BetaTable> {
    build_table(eps, digits, rows, false)
}

fn build_table(eps: &ExactRatio, digits: u32, max_rows: u64, require_end: bool) -> Result<BetaTable> {
    check_epsilon(eps)?;
    if digits < START_DIGITS {
        return Err(Error::invalid(format!("beta table needs at least {START_DIGITS} digits")));
    }
    let w = digits + 10;
    let c = shift_constant(eps, w)?;
    let mut rows = Vec::new();
    let mut logsum = IntervalReal::from_int(0, w);
    let mut theta = IntervalReal::from_int(0, w);
    let mut beta_max = None;
    let mut primes = PrimeStream::new(u64::MAX, MIN_SEGMENT, 0);
    for alpha in 1..=max_rows {
        let p = primes.next().expect("unbounded prime stream");
        let pb = IntervalReal::from_int(p, w);
        let pm1 = IntervalReal::from_int(p - 1, w);
        logsum = logsum.add(&pb.div(&pm1)?.ln()?);
        theta = theta.add(&pb.ln()?);
        let loglog = logsum.sub(&c).exp()?;
        rows.push(BetaRow {
            alpha,
            prime: p,
            logsum: logsum.clone().with_digits(digits),
            loglog_n: loglog.clone().with_digits(digits),
        });
        if alpha >= 2 {
            // primorial >= n_alpha  <=>  ln theta >= log log n_alpha
            match compare(&theta.ln()?, &loglog) {
                CertifiedOrder::Less => {}
                CertifiedOrder::Greater => {
                    beta_max = Some(alpha);
                    break;
                }
                CertifiedOrder::Undecided => {
                    return Err(Error::precision(
                        format!("crossing undecided at alpha = {alpha}"),
                        digits * 2,
                    ))
                }
            }
        }
    }
    if require_end && beta_max.is_none() {
        return Err(Error::Capacity {
            detail: format!(
                "beta table not closed after {max_rows} rows; use the prime engine for this epsilon"
            ),
            resume: None,
        });
    }
    Ok(BetaTable {
        epsilon: eps.clone(),
        digits,
        rows,
        beta_max,
    })
}

#[derive(Debug, Clone)]
pub struct EnumerationConfig {
    /// Refuse when some `n_alpha` that admits candidates exceeds this.
    pub n_cap: u128,
    /// Refuse (flushing completed alphas) past this many candidates.
    pub candidate_cap: u64,
    pub threads: usize,
    /// Largest precision used when a comparison needs refinement.
    pub max_digits: u32,
    /// Resume token from an earlier capacity refusal.
    pub resume: Option<String>,
}

impl Default for EnumerationConfig {
    fn default() -> Self {
        EnumerationConfig {
            n_cap: 1_000_000_000,
            candidate_cap: 20_000_000,
            threads: crate::par::default_threads(),
            max_digits: 200,
            resume: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExceptionRecord {
    #[serde(serialize_with = "ser_display")]
    pub n: BigUint,
    pub factorization: Factorization,
    pub omega: u64,
    /// `ln f(n)`
    pub f_log: IntervalReal,
    /// `ln(e^gamma (1 + eps) log log n)`; `None` when `log log n <= 0`.
    pub rhs_log: Option<IntervalReal>,
}

fn ser_display<S: serde::Serializer, T: std::fmt::Display>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Debug, Clone, Serialize)]
pub struct ExceptionSummary {
    pub epsilon: ExactRatio,
    pub beta_max: u64,
    pub table_digest: String,
    pub counts_by_alpha: Vec<(u64, u64)>,
    pub total: u64,
    pub max_n_alpha_floor: String,
    pub boundary_refinements: u64,
}

/// Parse `alpha:<k>`.
fn parse_token(t: &str) -> Result<u64> {
    t.strip_prefix("alpha:")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::invalid(format!("bad resume token {t:?}")))
}

/// Integer bounds `floor(n_alpha)` from both ends of the enclosure.
fn floor_bounds(n_alpha: &IntervalReal) -> (u128, u128) {
    let (lo, hi) = n_alpha.floor_bounds();
    let clamp = |v: num_bigint::BigInt| v.to_u128().unwrap_or(u128::MAX);
    (clamp(lo.max(0.into())), clamp(hi.max(0.into())))
}

/// Depth-first generation of all `n <= bound` with exactly `k` distinct prime
/// factors, all taken from `primes[start..]`, times `prefix`.
fn dfs(
    primes: &[u64],
    start: usize,
    k: usize,
    prefix: u128,
    bound: u128,
    stack: &mut Vec<(u128, u64)>,
    out: &mut Vec<(u128, Vec<(u128, u64)>)>,
) {
    if k == 0 {
        out.push((prefix, stack.clone()));
        return;
    }
    for i in start..primes.len() {
        let p = primes[i] as u128;
        // prefix * p^k is the least completion using p as the next prime.
        let mut least = prefix;
        let mut ok = true;
        for _ in 0..k {
            match least.checked_mul(p) {
                Some(v) if v <= bound => least = v,
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            break;
        }
        let mut val = prefix * p;
        let mut e = 1u64;
        loop {
            stack.push((p, e));
            dfs(primes, i + 1, k - 1, val, bound, stack, out);
            stack.pop();
            match val.checked_mul(p) {
                Some(v) if v <= bound => {
                    val = v;
                    e += 1;
                }
                _ => break,
            }
        }
    }
}

/// Decide `n <= n_alpha` via `log log n` against the row, with refinement.
fn within(n: u128, loglog_row: &dyn Fn(u32) -> Result<IntervalReal>, max_digits: u32) -> Result<bool> {
    let ord = compare_refining(START_DIGITS, max_digits, |d| {
        let l = IntervalReal::from_int(n, d + 5).ln()?.ln()?;
        Ok((l, loglog_row(d)?))
    })?;
    match ord {
        CertifiedOrder::Less => Ok(true),
        CertifiedOrder::Greater => Ok(false),
        CertifiedOrder::Undecided => Err(Error::precision(
            format!("cannot place n = {n} against n_alpha"),
            max_digits * 2,
        )),
    }
}

/// Enumerate every exception, calling `sink` in order (alpha ascending, then
/// n ascending). On a candidate-cap refusal the alphas already completed have
/// been delivered and the error carries a resume token.
pub fn enumerate_exceptions_into(
    table: &BetaTable,
    cfg: &EnumerationConfig,
    sink: &mut dyn FnMut(&ExceptionRecord) -> Result<()>,
) -> Result<ExceptionSummary> {
    let beta_max = table
        .beta_max
        .ok_or_else(|| Error::invalid("enumeration needs a complete beta table"))?;
    let first_alpha = match &cfg.resume {
        Some(t) => parse_token(t)?,
        None => 1,
    };
    let digits = table.digits;
    let c = shift_constant(&table.epsilon, digits + 10)?;

    // Bounds per alpha, and the cap check before any work.
    let mut bounds = Vec::new();
    let mut primorial: u128 = 1;
    let mut overflowed = false;
    let mut max_floor: u128 = 0;
    for row in &table.rows {
        let n_alpha = table.n_alpha(row.alpha)?;
        if !overflowed {
            match primorial.checked_mul(row.prime as u128) {
                Some(v) => primorial = v,
                None => overflowed = true,
            }
        }
        let (lo, hi) = floor_bounds(&n_alpha);
        let has_candidates = !overflowed && primorial <= hi;
        if has_candidates && hi > cfg.n_cap {
            return Err(Error::Capacity {
                detail: format!(
                    "n_alpha exceeds the cap {} at alpha = {} (n_alpha ~ {})",
                    cfg.n_cap,
                    row.alpha,
                    n_alpha.midpoint_string(6)
                ),
                resume: None,
            });
        }
        if has_candidates {
            max_floor = max_floor.max(hi);
        }
        bounds.push((row.alpha, has_candidates, lo, hi));
    }
    let prime_limit = bounds
        .iter()
        .filter(|b| b.1)
        .map(|b| b.3)
        .max()
        .unwrap_or(1)
        .min(u64::MAX as u128) as u64;
    let primes = small_primes(prime_limit.max(2));

    let mut counts = Vec::new();
    let mut total = 0u64;
    let mut candidates = 0u64;
    let mut refinements = 0u64;
    for &(alpha, has, lo, hi) in &bounds {
        if alpha < first_alpha {
            continue;
        }
        if !has || hi < 2 {
            counts.push((alpha, 0));
            continue;
        }
        let row = table.row(alpha).unwrap().clone();
        // Top-level branches by smallest prime, run on the pool, merged in order.
        let k = alpha as usize;
        let firsts: Vec<usize> = (0..primes.len())
            .take_while(|&i| (primes[i] as u128).checked_pow(k as u32).is_some_and(|v| v <= hi))
            .collect();
        let branches = crate::par::with_threads(cfg.threads, || {
            crate::par::map_ordered(firsts, |i| {
                let mut out = Vec::new();
                let mut stack = Vec::new();
                let p = primes[i] as u128;
                let mut val = p;
                let mut e = 1u64;
                loop {
                    stack.push((p, e));
                    dfs(&primes, i + 1, k - 1, val, hi, &mut stack, &mut out);
                    stack.pop();
                    match val.checked_mul(p) {
                        Some(v) if v <= hi => {
                            val = v;
                            e += 1;
                        }
                        _ => break,
                    }
                }
                out
            })
        });
        let mut found: Vec<(u128, Vec<(u128, u64)>)> = branches.into_iter().flatten().collect();
        candidates += found.len() as u64;
        if candidates > cfg.candidate_cap {
            return Err(Error::Capacity {
                detail: format!(
                    "candidate cap {} exceeded at alpha = {alpha}; alphas below it were flushed",
                    cfg.candidate_cap
                ),
                resume: Some(format!("alpha:{alpha}")),
            });
        }
        found.sort_by_key(|x| x.0);

        let lorow = |d: u32| -> Result<IntervalReal> {
            if d <= digits {
                Ok(row.loglog_n.clone())
            } else {
                let t = beta_table_prefix(&table.epsilon, d, alpha)?;
                Ok(t.rows[alpha as usize - 1].loglog_n.clone())
            }
        };
        let f_log = row.logsum.clone();
        let max_digits = cfg.max_digits.max(digits);
        let verified = crate::par::with_threads(cfg.threads, || {
            crate::par::map_ordered(found, |(n, fac)| -> Result<Option<ExceptionRecord>> {
                if n > lo {
                    if !within(n, &lorow, max_digits)? {
                        return Ok(None);
                    }
                }
                let rhs_log = verify_exception(n, &f_log, &c, max_digits)?;
                Ok(Some(ExceptionRecord {
                    n: BigUint::from(n),
                    factorization: Factorization::from_sorted_unchecked(fac),
                    omega: alpha,
                    f_log: f_log.clone(),
                    rhs_log,
                }))
            })
        });
        let mut count = 0u64;
        for r in verified {
            if let Some(rec) = r? {
                if rec.n > BigUint::from(lo) {
                    refinements += 1;
                }
                sink(&rec)?;
                count += 1;
            }
        }
        counts.push((alpha, count));
        total += count;
    }
    Ok(ExceptionSummary {
        epsilon: table.epsilon.clone(),
        beta_max,
        table_digest: table.digest(),
        counts_by_alpha: counts,
        total,
        max_n_alpha_floor: max_floor.to_string(),
        boundary_refinements: refinements,
    })
}

/// Certify that `n` is an exception: `ln f >= ln(e^gamma (1+eps) log log n)`.
/// Returns the right-hand side used (or `None` when `log log n <= 0`).
fn verify_exception(n: u128, f_log: &IntervalReal, c: &IntervalReal, max_digits: u32) -> Result<Option<IntervalReal>> {
    // log log n <= 0 iff n <= e, i.e. n = 2.
    if n <= 2 {
        return Ok(None);
    }
    let mut last = None;
    let ord = compare_refining(START_DIGITS, max_digits, |d| {
        let l3 = IntervalReal::from_int(n, d + 5).ln()?.ln()?.ln()?;
        let rhs = c.add(&l3).with_digits(d);
        last = Some(rhs.clone());
        Ok((rhs, f_log.clone()))
    })?;
    match ord {
        CertifiedOrder::Less => Ok(last),
        CertifiedOrder::Greater => Err(Error::invalid(format!(
            "n = {n} is not an exception although it lies below n_alpha"
        ))),
        CertifiedOrder::Undecided => Err(Error::precision(
            format!("exception test undecided for n = {n}"),
            max_digits * 2,
        )),
    }
}

/// Collecting wrapper around [`enumerate_exceptions_into`].
pub fn enumerate_exceptions(table: &BetaTable, cfg: &EnumerationConfig) -> Result<(Vec<ExceptionRecord>, ExceptionSummary)> {
    let mut out = Vec::new();
    let summary = enumerate_exceptions_into(table, cfg, &mut |r| {
        out.push(r.clone());
        Ok(())
    })?;
    Ok((out, summary))
}

pub const CSV_HEADER: &str = "n,omega,factorization,f_log,rhs_log";

/// One CSV line (no newline) for a record.
pub fn csv_line(r: &ExceptionRecord) -> String {
    let rhs = match &r.rhs_log {
        Some(x) => x.midpoint_string(20),
        None => "-inf".to_string(),
    };
    format!("{},{},{},{},{}", r.n, r.omega, r.factorization, r.f_log.midpoint_string(20), rhs)
}

pub fn write_csv<W: Write>(mut w: W, records: &[ExceptionRecord]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", csv_line(r))?;
    }
    Ok(())
}
