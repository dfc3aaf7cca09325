//! Colossally abundant numbers and Robin's inequality on them.
//!
//! Raising the exponent of `p` from `a` to `a + 1` pays off for every
//! parameter below `eps_p(a) = log(1 + (p-1)/(p^(a+2) - p)) / log p`. The
//! sequence applies these steps in decreasing order of `eps_p(a)`. Within
//! one exponent level the smallest prime has the largest value, so one cursor
//! per level is enough.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use serde::Serialize;

use crate::arith::{robin_check, Factorization, Verdict};
use crate::error::{Error, Result};
use crate::fixed::{ln_u64, FixedInterval};
use crate::highprec::{compare_refining, exp_gamma, CertifiedOrder, IntervalReal};
use crate::primes::{small_primes, PrimeStream, MIN_SEGMENT};
use crate::scan::{robin_scan, ScanConfig};

/// Elements with `log n` below this are checked exactly (`n < 10^12`).
const EXACT_LOG_N: f64 = 27.6;

/// Relative closeness of two `f64` keys that triggers a certified comparison.
const TIE_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct CANumber {
    /// 1 for the first element, 2.
    pub index: u64,
    /// The prime multiplied in to reach this element.
    pub step_prime: u64,
    /// Its exponent afterwards.
    pub step_exponent: u64,
    /// `eps_p(a)` of the step, as a float.
    pub critical_epsilon: f64,
    /// `profile[i]` = number of primes with exponent at least `i + 1`.
    pub profile: Vec<u64>,
    pub largest_prime: u64,
    #[serde(skip)]
    pub log_n: FixedInterval,
    /// `log(sigma(n)/n)`
    #[serde(skip)]
    pub log_sigma_ratio: FixedInterval,
}

impl CANumber {
    pub fn log_n_interval(&self, digits: u32) -> IntervalReal {
        self.log_n.to_interval(digits)
    }

    pub fn log_sigma_ratio_interval(&self, digits: u32) -> IntervalReal {
        self.log_sigma_ratio.to_interval(digits)
    }

    pub fn loglog_n_f64(&self) -> f64 {
        self.log_n.mid_f64().ln()
    }

    /// Exponent of the `i`-th prime (0-based).
    pub fn exponent_of_index(&self, i: u64) -> u64 {
        self.profile.iter().take_while(|&&c| c > i).count() as u64
    }

    /// Materialized factorization; refused past a million distinct primes.
    pub fn factorization(&self) -> Result<Factorization> {
        let k = self.profile.first().copied().unwrap_or(0);
        if k > 1_000_000 {
            return Err(Error::Capacity {
                detail: format!("{k} distinct primes is too many to materialize"),
                resume: None,
            });
        }
        let primes = small_primes(self.largest_prime.max(2));
        let f = primes
            .iter()
            .take(k as usize)
            .enumerate()
            .map(|(i, &p)| (p as u128, self.exponent_of_index(i as u64)))
            .collect();
        Ok(Factorization::from_sorted_unchecked(f))
    }

    /// Decimal value, refused past 10^4 digits.
    pub fn value(&self) -> Result<BigUint> {
        if self.log_n.hi_f64() / std::f64::consts::LN_10 > 1e4 {
            return Err(Error::Capacity {
                detail: format!("element {} has more than 10^4 digits", self.index),
                resume: None,
            });
        }
        Ok(self.factorization()?.value())
    }
}

struct Level {
    stream: PrimeStream,
    prime: u64,
    key: f64,
}

impl Level {
    fn new(a: u64) -> Level {
        let mut stream = PrimeStream::new(u64::MAX, MIN_SEGMENT, 0);
        let prime = stream.next().expect("unbounded prime stream");
        Level {
            stream,
            prime,
            key: key_f64(prime, a),
        }
    }

    fn advance(&mut self, a: u64) {
        self.prime = self.stream.next().expect("unbounded prime stream");
        self.key = key_f64(self.prime, a);
    }
}

/// `eps_p(a)` in floating point; `(p-1)/(p^(a+2)-p) = 1/(p (1 + p + ... + p^a))`.
fn key_f64(p: u64, a: u64) -> f64 {
    let pf = p as f64;
    let geo = if a == 0 { 1.0 } else { (pf.powi(a as i32 + 1) - 1.0) / (pf - 1.0) };
    (1.0 / (pf * geo)).ln_1p() / pf.ln()
}

/// Certified enclosure of `eps_p(a)`.
fn key_interval(p: u64, a: u64, digits: u32) -> Result<IntervalReal> {
    let pb = BigInt::from(p);
    let top = pb.pow(a as u32 + 2);
    let x = BigRational::new(&top - 1u32, &top - &pb);
    IntervalReal::from_ratio(&x, digits)
        .ln()?
        .div(&IntervalReal::from_int(p, digits).ln()?)
}

/// Exact `1 + (p-1)/(p^(a+2)-p)` as a fixed-point enclosure.
fn sigma_step(p: u64, a: u64) -> Result<FixedInterval> {
    let top = (p as u128)
        .checked_pow(a as u32 + 2)
        .ok_or_else(|| Error::Capacity {
            detail: format!("{p}^{} overflows the step computation", a + 2),
            resume: None,
        })?;
    Ok(FixedInterval::from_ratio_u128(top - 1, top - p as u128))
}

/// Generator of the colossally abundant numbers in increasing order.
pub struct CaSequence {
    levels: Vec<Level>,
    /// `counts[a]` = number of primes with exponent at least `a + 1`.
    counts: Vec<u64>,
    log_n: FixedInterval,
    log_sigma: FixedInterval,
    index: u64,
    max_loglog: f64,
    max_digits: u32,
    largest_prime: u64,
    done: bool,
    /// Near-ties that needed a certified comparison, as `p^a vs q^b`.
    pub ties: Vec<String>,
}

impl CaSequence {
    fn count(&self, a: usize) -> u64 {
        self.counts.get(a).copied().unwrap_or(0)
    }

    /// Some prime sits at exponent exactly `a`.
    fn valid(&self, a: usize) -> bool {
        a == 0 || self.count(a) < self.count(a - 1)
    }

    /// Certified choice among levels whose keys are within the tie band of the best.
    fn resolve(&mut self, cands: &[usize]) -> Result<usize> {
        let mut best = cands[0];
        for &c in &cands[1..] {
            let (p, a) = (self.levels[best].prime, best as u64);
            let (q, b) = (self.levels[c].prime, c as u64);
            let ord = compare_refining(40, self.max_digits, |d| Ok((key_interval(p, a, d)?, key_interval(q, b, d)?)))?;
            self.ties.push(format!("{p}^{} vs {q}^{}", a + 1, b + 1));
            best = match ord {
                CertifiedOrder::Greater => best,
                CertifiedOrder::Less => c,
                CertifiedOrder::Undecided => {
                    return Err(Error::precision(
                        format!("critical values of {p}^{} and {q}^{} not separated", a + 1, b + 1),
                        self.max_digits * 2,
                    ))
                }
            };
        }
        Ok(best)
    }

    fn step(&mut self) -> Result<Option<CANumber>> {
        if self.done {
            return Ok(None);
        }
        let mut best: Option<usize> = None;
        for a in 0..self.levels.len() {
            if self.valid(a) && best.is_none_or(|b| self.levels[a].key > self.levels[b].key) {
                best = Some(a);
            }
        }
        let b = best.expect("level 0 is always available");
        let top = self.levels[b].key;
        let close: Vec<usize> = (0..self.levels.len())
            .filter(|&a| a != b && self.valid(a) && (top - self.levels[a].key).abs() <= TIE_BAND * top)
            .collect();
        let a = if close.is_empty() {
            b
        } else {
            let mut c = vec![b];
            c.extend(close);
            c.sort_by_key(|&l| self.levels[l].prime);
            self.resolve(&c)?
        };

        let p = self.levels[a].prime;
        let ln_p = ln_u64(p);
        let next_log_n = self.log_n.add(&ln_p);
        if next_log_n.mid_f64().ln() > self.max_loglog {
            self.done = true;
            return Ok(None);
        }
        let step = sigma_step(p, a as u64)?.ln()?;
        let critical = self.levels[a].key;
        self.log_n = next_log_n;
        self.log_sigma = self.log_sigma.add(&step);
        if a == self.counts.len() {
            self.counts.push(0);
        }
        self.counts[a] += 1;
        self.levels[a].advance(a as u64);
        if a + 1 == self.levels.len() {
            self.levels.push(Level::new(a as u64 + 1));
        }
        if a == 0 {
            self.largest_prime = p;
        }
        self.index += 1;
        Ok(Some(CANumber {
            index: self.index,
            step_prime: p,
            step_exponent: a as u64 + 1,
            critical_epsilon: critical,
            profile: self.counts.clone(),
            largest_prime: self.largest_prime,
            log_n: self.log_n,
            log_sigma_ratio: self.log_sigma,
        }))
    }
}

impl Iterator for CaSequence {
    type Item = Result<CANumber>;

    fn next(&mut self) -> Option<Result<CANumber>> {
        match self.step() {
            Ok(Some(c)) => Some(Ok(c)),
            Ok(None) => None,
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Colossally abundant numbers with `log log n <= max_loglog_n`.
/// `digits` bounds the precision used to separate near-equal critical values.
pub fn ca_sequence(max_loglog_n: f64, digits: u32) -> Result<CaSequence> {
    if !(max_loglog_n >= 1.0) {
        return Err(Error::invalid(format!("max log log n must be at least 1, got {max_loglog_n}")));
    }
    if max_loglog_n > 22.0 {
        return Err(Error::Capacity {
            detail: format!("log log n up to {max_loglog_n} is past the generator's prime range"),
            resume: None,
        });
    }
    Ok(CaSequence {
        levels: vec![Level::new(0)],
        counts: Vec::new(),
        log_n: FixedInterval::ZERO,
        log_sigma: FixedInterval::ZERO,
        index: 0,
        max_loglog: max_loglog_n,
        max_digits: digits.max(40),
        largest_prime: 0,
        done: false,
        ties: Vec::new(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CaRow {
    pub index: u64,
    pub step_prime: u64,
    pub step_exponent: u64,
    pub loglog_n: IntervalReal,
    pub sigma_ratio: IntervalReal,
    /// `e^gamma log log n`; absent for `n <= 2`.
    pub rhs: Option<IntervalReal>,
    pub margin: Option<IntervalReal>,
    pub verdict: Verdict,
    pub above_5040: bool,
}

pub const CA_CSV_HEADER: &str = "index,loglog_n,sigma_ratio,rhs,margin,verdict";

impl CaRow {
    pub fn csv_line(&self) -> String {
        let opt = |x: &Option<IntervalReal>| x.as_ref().map(|v| v.midpoint_string(20)).unwrap_or_default();
        format!(
            "{},{},{},{},{},{:?}",
            self.index,
            self.loglog_n.midpoint_string(20),
            self.sigma_ratio.midpoint_string(20),
            opt(&self.rhs),
            opt(&self.margin),
            self.verdict
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CaSummary {
    pub max_loglog_n: f64,
    pub count: u64,
    pub holds: u64,
    /// Indices failing, with those above 5040 listed separately.
    pub fails: Vec<u64>,
    pub fails_above_5040: Vec<u64>,
    pub undecided: Vec<u64>,
    pub min_margin_above_5040: Option<IntervalReal>,
    pub min_margin_index: Option<u64>,
    pub last_index: u64,
    pub last_loglog_n: f64,
    pub ties: Vec<String>,
}

impl CaSummary {
    /// No failure or undecided verdict above 5040.
    pub fn clean(&self) -> bool {
        self.fails_above_5040.is_empty() && self.undecided.is_empty()
    }
}

fn verify_one(c: &CANumber, egamma: &FixedInterval, digits: u32) -> Result<CaRow> {
    if c.log_n.hi_f64() < EXACT_LOG_N {
        let f = c.factorization()?;
        let out = robin_check(&f, digits)?;
        let ll = f.ln_value(40)?.ln()?;
        return Ok(CaRow {
            index: c.index,
            step_prime: c.step_prime,
            step_exponent: c.step_exponent,
            loglog_n: ll,
            margin: out.margin(),
            sigma_ratio: out.sigma_ratio,
            rhs: out.rhs,
            verdict: out.verdict,
            above_5040: f.value_u128().is_some_and(|v| v > 5040),
        });
    }
    let ll = c.log_n.ln()?;
    let rhs = egamma.mul_nonneg(&ll);
    let sigma = c.log_sigma_ratio.exp()?;
    let margin = rhs.sub(&sigma);
    let verdict = if margin.lo > 0 {
        Verdict::Holds
    } else if margin.hi < 0 {
        Verdict::Fails
    } else {
        Verdict::Undecided
    };
    let d = 40;
    Ok(CaRow {
        index: c.index,
        step_prime: c.step_prime,
        step_exponent: c.step_exponent,
        loglog_n: ll.to_interval(d),
        sigma_ratio: sigma.to_interval(d),
        rhs: Some(rhs.to_interval(d)),
        margin: Some(margin.to_interval(d)),
        verdict,
        above_5040: true,
    })
}

#[derive(Debug, Clone)]
pub struct CaConfig {
    pub digits: u32,
    pub threads: usize,
    /// Elements generated before each parallel verification pass.
    pub batch: usize,
}

impl Default for CaConfig {
    fn default() -> Self {
        CaConfig {
            digits: 200,
            threads: crate::par::default_threads(),
            batch: 1 << 14,
        }
    }
}

/// Robin's inequality on every element up to `max_loglog_n`; each row goes to
/// `sink` in order.
pub fn verify_robin_on_ca(
    max_loglog_n: f64,
    cfg: &CaConfig,
    sink: &mut dyn FnMut(&CaRow) -> Result<()>,
) -> Result<CaSummary> {
    let mut seq = ca_sequence(max_loglog_n, cfg.digits)?;
    let egamma = FixedInterval::from_interval(&exp_gamma(50)?);
    let mut s = CaSummary {
        max_loglog_n,
        count: 0,
        holds: 0,
        fails: Vec::new(),
        fails_above_5040: Vec::new(),
        undecided: Vec::new(),
        min_margin_above_5040: None,
        min_margin_index: None,
        last_index: 0,
        last_loglog_n: 0.0,
        ties: Vec::new(),
    };
    let mut min_lo: Option<IntervalReal> = None;
    loop {
        let batch: Vec<CANumber> = seq.by_ref().take(cfg.batch).collect::<Result<_>>()?;
        if batch.is_empty() {
            break;
        }
        let rows = crate::par::with_threads(cfg.threads, || {
            crate::par::map_ordered(batch, |c| {
                let r = verify_one(&c, &egamma, cfg.digits);
                (r, c.loglog_n_f64())
            })
        });
        for (row, ll) in rows {
            let row = row?;
            s.count += 1;
            s.last_index = row.index;
            s.last_loglog_n = ll;
            match row.verdict {
                Verdict::Holds => s.holds += 1,
                Verdict::Fails => {
                    s.fails.push(row.index);
                    if row.above_5040 {
                        s.fails_above_5040.push(row.index);
                    }
                }
                Verdict::Undecided => s.undecided.push(row.index),
            }
            if row.above_5040 {
                if let Some(m) = &row.margin {
                    if min_lo.as_ref().is_none_or(|cur| m.lo() < cur.lo()) {
                        min_lo = Some(m.clone());
                        s.min_margin_index = Some(row.index);
                    }
                }
            }
            sink(&row)?;
        }
    }
    s.min_margin_above_5040 = min_lo;
    s.ties = std::mem::take(&mut seq.ties);
    Ok(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub n1: String,
    pub n2: String,
    pub checked: u64,
    pub violators: Vec<u64>,
    pub violators_above_5040: Vec<u64>,
    pub undecided: Vec<u64>,
}

/// Robin's inequality on every integer in `(n1, n2]`.
pub fn gap_check(n1: &CANumber, n2: &CANumber, exhaustive_limit: u64, cfg: &ScanConfig) -> Result<GapReport> {
    let v1 = n1.value()?;
    let v2 = n2.value()?;
    if n1.index == n2.index {
        return Ok(GapReport {
            n1: v1.to_string(),
            n2: v2.to_string(),
            checked: 0,
            violators: Vec::new(),
            violators_above_5040: Vec::new(),
            undecided: Vec::new(),
        });
    }
    if n2.index != n1.index + 1 {
        return Err(Error::invalid(format!(
            "elements {} and {} are not consecutive",
            n1.index, n2.index
        )));
    }
    if v2 > BigUint::from(exhaustive_limit) {
        return Err(Error::Capacity {
            detail: format!("gap up to {v2} exceeds the exhaustive limit {exhaustive_limit}"),
            resume: None,
        });
    }
    let lo: u64 = v1.try_into().expect("below the limit");
    let hi: u64 = v2.try_into().expect("below the limit");
    let r = robin_scan(lo + 1, hi, cfg)?;
    Ok(GapReport {
        n1: lo.to_string(),
        n2: hi.to_string(),
        checked: r.checked,
        violators_above_5040: r.violators.iter().copied().filter(|&v| v > 5040).collect(),
        violators: r.violators,
        undecided: r.undecided,
    })
}

/// Gap checks on every consecutive pair with upper element `<= limit`.
pub fn gap_check_all(limit: u64, cfg: &ScanConfig) -> Result<Vec<GapReport>> {
    let max_ll = ((limit as f64).ln().ln() + 0.01).max(1.0);
    let elems: Vec<CANumber> = ca_sequence(max_ll, 100)?.collect::<Result<_>>()?;
    let mut out = Vec::new();
    for w in elems.windows(2) {
        if w[1].log_n.lo_f64() > (limit as f64).ln() + 1e-9 {
            break;
        }
        if w[1].value()? > BigUint::from(limit) {
            break;
        }
        out.push(gap_check(&w[0], &w[1], limit, cfg)?);
    }
    Ok(out)
}
