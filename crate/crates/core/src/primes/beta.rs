//! Search for the first `beta` whose primorial reaches `n_beta`.
//!
//! With `L = sum_{p <= p_beta} log(p/(p-1))` and `c = gamma + log(1 + eps)`,
//! `log log n_beta = exp(L - c)`. The primorial reaches `n_beta` exactly when
//! `log theta(p_beta) >= exp(L - c)`. Both sides are monotone in `beta`, so a
//! run of primes can be cleared with one comparison of its extreme states.

use std::path::PathBuf;

use num_traits::{One, Signed};
use serde::Serialize;

use super::checkpoint::Checkpoint;
use super::mertens::{segment_states, summarize_segment, MertensAccumulator};
use super::sieve::{BasePrimes, SieveConfig};
use crate::arith::ExactRatio;
use crate::error::{Error, Result};
use crate::fixed::{raw_to_dyadic, FixedInterval};
use crate::highprec::{euler_gamma, IntervalReal};

/// Precision of the per-comparison evaluations (the fixed-point inputs carry
/// about 38 digits, so more would not sharpen anything).
const CMP_DIGITS: u32 = 45;

/// Primes above this are out of the engine's range.
const MAX_PRIME: u64 = 1 << 42;

#[derive(Debug, Clone)]
pub struct BetaSearchOptions {
    /// Primes past the crossing that must keep the predicate true.
    pub overshoot_primes: u64,
    /// Stop (after checkpointing) once this many segments have been processed
    /// in this invocation.
    pub max_segments: Option<u64>,
    /// Continue from `cfg.checkpoint_path` when it exists.
    pub resume: bool,
}

impl Default for BetaSearchOptions {
    fn default() -> Self {
        BetaSearchOptions {
            overshoot_primes: 1 << 20,
            max_segments: None,
            resume: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BetaMaxResult {
    pub epsilon: ExactRatio,
    pub beta_max: u64,
    pub p_beta_max: u64,
    pub loglog_n_beta_max: IntervalReal,
    pub logsum: IntervalReal,
    pub theta: IntervalReal,
    pub overshoot_primes_checked: u64,
    /// `beta` values past the crossing where the predicate was false again.
    pub reversals: Vec<u64>,
    pub resumed_from_segment: Option<u64>,
    #[serde(skip)]
    pub checkpoint_errors: Vec<String>,
    #[serde(skip)]
    pub state: MertensAccumulator,
}

struct Predicate {
    c: FixedInterval,
}

impl Predicate {
    fn new(eps: &ExactRatio) -> Result<Self> {
        let one_plus = IntervalReal::from_ratio(&(eps.0.clone() + num_rational::BigRational::one()), 60);
        let c = euler_gamma(60)?.add(&one_plus.ln()?);
        Ok(Predicate {
            c: FixedInterval::from_interval(&c),
        })
    }

    fn exp_shifted(&self, l: I256Pair) -> Result<IntervalReal> {
        let x = FixedInterval {
            lo: l.0 - self.c.hi,
            hi: l.1 - self.c.lo,
        };
        x.to_interval(CMP_DIGITS).exp()
    }

    /// Predicate false for every state between `first` and `last`.
    fn none_between(&self, first: &MertensAccumulator, last: &MertensAccumulator) -> Result<bool> {
        let th = FixedInterval::new(last.theta.hi, last.theta.hi);
        let a = th.ln()?;
        let b = self.exp_shifted((first.logsum.lo, first.logsum.lo))?;
        Ok(raw_to_dyadic(a.hi) < *b.lo())
    }

    /// Predicate true for every state between `first` and `last`.
    fn all_between(&self, first: &MertensAccumulator, last: &MertensAccumulator) -> Result<bool> {
        if first.theta.lo <= 0 {
            return Ok(false);
        }
        let th = FixedInterval::new(first.theta.lo, first.theta.lo);
        let a = th.ln()?;
        let b = self.exp_shifted((last.logsum.hi, last.logsum.hi))?;
        Ok(raw_to_dyadic(a.lo) > *b.hi())
    }

    fn decide(&self, s: &MertensAccumulator) -> Result<bool> {
        if self.all_between(s, s)? {
            Ok(true)
        } else if self.none_between(s, s)? {
            Ok(false)
        } else {
            Err(Error::precision(
                format!("crossing test undecided at beta = {} (p = {})", s.beta, s.last_prime),
                CMP_DIGITS * 2,
            ))
        }
    }

    /// First index in `states[lo..hi]` where the predicate holds.
    fn first_true(&self, states: &[MertensAccumulator], lo: usize, hi: usize) -> Result<Option<usize>> {
        if lo >= hi || self.none_between(&states[lo], &states[hi - 1])? {
            return Ok(None);
        }
        if hi - lo == 1 {
            return Ok(if self.decide(&states[lo])? { Some(lo) } else { None });
        }
        let mid = lo + (hi - lo) / 2;
        if let Some(i) = self.first_true(states, lo, mid)? {
            return Ok(Some(i));
        }
        self.first_true(states, mid, hi)
    }

    /// Indices in `states[lo..hi]` where the predicate fails.
    fn falses(&self, states: &[MertensAccumulator], lo: usize, hi: usize, out: &mut Vec<usize>) -> Result<()> {
        if lo >= hi || self.all_between(&states[lo], &states[hi - 1])? {
            return Ok(());
        }
        if hi - lo == 1 {
            if !self.decide(&states[lo])? {
                out.push(lo);
            }
            return Ok(());
        }
        let mid = lo + (hi - lo) / 2;
        self.falses(states, lo, mid, out)?;
        self.falses(states, mid, hi, out)
    }
}

type I256Pair = (ethnum::I256, ethnum::I256);

fn check_epsilon(eps: &ExactRatio) -> Result<()> {
    if !eps.0.is_positive() || eps.0 >= num_rational::BigRational::one() {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// Find `beta_max` for `eps` with default options.
pub fn find_beta_max(eps: &ExactRatio, cfg: &SieveConfig, digits: u32) -> Result<BetaMaxResult> {
    find_beta_max_with(eps, cfg, digits, &BetaSearchOptions::default())
}

pub fn find_beta_max_with(
    eps: &ExactRatio,
    cfg: &SieveConfig,
    digits: u32,
    opts: &BetaSearchOptions,
) -> Result<BetaMaxResult> {
    check_epsilon(eps)?;
    cfg.validate()?;
    let pred = Predicate::new(eps)?;
    let seg = cfg.segment_size;
    let ckpt_path: Option<PathBuf> = cfg.checkpoint_path.clone();

    let mut state = MertensAccumulator::default();
    let mut next = 0u64;
    let mut resumed_from = None;
    if opts.resume {
        if let Some(path) = ckpt_path.as_ref().filter(|p| p.exists()) {
            let ck = Checkpoint::load(path)?;
            if ck.eps_num != eps.numer().to_string() || ck.eps_den != eps.denom().to_string() {
                return Err(Error::Checkpoint(format!(
                    "checkpoint is for epsilon {}/{}, not {eps}",
                    ck.eps_num, ck.eps_den
                )));
            }
            if ck.segment_size != seg {
                return Err(Error::Checkpoint(format!(
                    "checkpoint segment size {} differs from configured {seg}",
                    ck.segment_size
                )));
            }
            state = ck.state;
            next = ck.next_segment;
            resumed_from = Some(next);
        }
    }

    let mut errors = Vec::new();
    let save = |state: &MertensAccumulator, next: u64, errors: &mut Vec<String>| {
        if let Some(path) = ckpt_path.as_ref() {
            let ck = Checkpoint {
                eps_num: eps.numer().to_string(),
                eps_den: eps.denom().to_string(),
                state: *state,
                next_segment: next,
                segment_size: seg,
            };
            if let Err(e) = ck.save(path) {
                errors.push(e.to_string());
            }
        }
    };

    let mut base = BasePrimes::default();
    let batch = (cfg.threads as u64 * 2).max(2);
    let mut done_here = 0u64;
    let mut since_ckpt = 0u64;

    // Phase 1: locate the crossing.
    let (found, found_seg, seg_states, idx) = 'search: loop {
        if 2 * next * seg + 1 > MAX_PRIME {
            return Err(Error::Capacity {
                detail: format!("no crossing below {MAX_PRIME}"),
                resume: None,
            });
        }
        if let Some(m) = opts.max_segments {
            if done_here >= m {
                save(&state, next, &mut errors);
                return Err(Error::Capacity {
                    detail: format!("segment budget of {m} reached at beta = {}", state.beta),
                    resume: ckpt_path.as_ref().map(|p| p.display().to_string()),
                });
            }
        }
        let take = match opts.max_segments {
            Some(m) => batch.min(m - done_here),
            None => batch,
        };
        base.ensure(2 * (next + take) * seg + 1);
        let js: Vec<u64> = (next..next + take).collect();
        let sums = crate::par::with_threads(cfg.threads, || {
            crate::par::map_ordered(js, |j| summarize_segment(j, seg, &base, u64::MAX, u64::MAX))
        });
        for s in sums {
            let j = next;
            let after = state.extend(&s);
            // Only beta >= 2 counts; the state before segment 0 is empty.
            let cleared = s.beta == 0 || pred.none_between(&state, &after)?;
            if !cleared {
                let states = segment_states(j, seg, &base, &state);
                let start = if state.beta == 0 { 1 } else { 0 };
                if let Some(i) = pred.first_true(&states, start, states.len())? {
                    break 'search (states[i], j, states, i);
                }
            }
            state = after;
            next += 1;
            done_here += 1;
            since_ckpt += 1;
        }
        if since_ckpt >= cfg.checkpoint_every {
            save(&state, next, &mut errors);
            since_ckpt = 0;
        }
    };

    // Phase 2: the predicate must stay true over the overshoot window.
    let mut reversals = Vec::new();
    let mut checked = 0u64;
    let mut bad = Vec::new();
    let end = seg_states.len().min(idx + 1 + opts.overshoot_primes as usize);
    pred.falses(&seg_states, idx + 1, end, &mut bad)?;
    reversals.extend(bad.iter().map(|&i| seg_states[i].beta));
    checked += (end - idx - 1) as u64;
    let mut tail = *seg_states.last().unwrap();
    let mut j = found_seg + 1;
    while checked < opts.overshoot_primes {
        base.ensure(2 * (j + 1) * seg + 1);
        let s = summarize_segment(j, seg, &base, u64::MAX, u64::MAX);
        let after = tail.extend(&s);
        let want = (opts.overshoot_primes - checked).min(s.beta);
        if !pred.all_between(&tail, &after)? {
            let states = segment_states(j, seg, &base, &tail);
            let mut bad = Vec::new();
            pred.falses(&states, 0, want as usize, &mut bad)?;
            reversals.extend(bad.iter().map(|&i| states[i].beta));
        }
        checked += want;
        tail = after;
        j += 1;
    }

    let x = FixedInterval {
        lo: found.logsum.lo - pred.c.hi,
        hi: found.logsum.hi - pred.c.lo,
    };
    let loglog = x.to_interval(digits.max(CMP_DIGITS)).exp()?.with_digits(digits);
    Ok(BetaMaxResult {
        epsilon: eps.clone(),
        beta_max: found.beta,
        p_beta_max: found.last_prime,
        loglog_n_beta_max: loglog,
        logsum: found.logsum.to_interval(digits),
        theta: found.theta.to_interval(digits),
        overshoot_primes_checked: checked,
        reversals,
        resumed_from_segment: resumed_from,
        checkpoint_errors: errors,
        state: found,
    })
}

/// `log log n_beta` for a given log-sum enclosure (exposed for tests).
pub fn loglog_n_from_logsum(logsum: &IntervalReal, eps: &ExactRatio, digits: u32) -> Result<IntervalReal> {
    let one_plus = IntervalReal::from_ratio(&(eps.0.clone() + num_rational::BigRational::one()), digits + 5);
    let c = euler_gamma(digits + 5)?.add(&one_plus.ln()?);
    Ok(logsum.sub(&c).exp()?.with_digits(digits))
}
