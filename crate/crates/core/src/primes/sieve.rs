//! Odd-only, bit-packed segmented sieve of Eratosthenes.
//!
//! Segment `j` covers the odd integers `n = 2 (j L + i) + 1` for `0 <= i < L`,
//! where `L` is the segment size. The prime 2 is reported with segment 0.

use std::path::PathBuf;

use crate::error::{Error, Result};

/// Smallest accepted segment size (odd numbers per segment).
pub const MIN_SEGMENT: u64 = 1 << 16;

#[derive(Debug, Clone)]
pub struct SieveConfig {
    /// Odd numbers per segment; a multiple of 64, at least 2^16.
    pub segment_size: u64,
    pub threads: usize,
    pub checkpoint_path: Option<PathBuf>,
    /// Checkpoint after this many segments.
    pub checkpoint_every: u64,
}

impl Default for SieveConfig {
    fn default() -> Self {
        SieveConfig {
            segment_size: 1 << 20,
            threads: crate::par::default_threads(),
            checkpoint_path: None,
            checkpoint_every: 512,
        }
    }
}

impl SieveConfig {
    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.segment_size < MIN_SEGMENT || self.segment_size % 64 != 0 {
            return Err(Error::invalid(format!(
                "segment_size must be a multiple of 64 and at least {MIN_SEGMENT}, got {}",
                self.segment_size
            )));
        }
        if self.threads == 0 {
            return Err(Error::invalid("thread count must be positive"));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::invalid("checkpoint interval must be positive"));
        }
        Ok(())
    }

    /// Segment index range `[lo, hi)` of odd integers covered by segment `j`.
    pub fn segment_bounds(&self, j: u64) -> (u64, u64) {
        let lo = 2 * j * self.segment_size + 1;
        (lo, lo + 2 * self.segment_size)
    }
}

/// All primes up to `limit` by a plain sieve.
pub fn small_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut comp = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !comp[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                comp[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Odd primes up to `sqrt(hi)`, grown on demand.
#[derive(Debug, Default, Clone)]
pub struct BasePrimes {
    limit: u64,
    odd: Vec<u64>,
}

impl BasePrimes {
    pub fn covering(hi: u64) -> Self {
        let mut b = BasePrimes::default();
        b.ensure(hi);
        b
    }

    /// Make sure every prime `p` with `p^2 < hi` is present.
    pub fn ensure(&mut self, hi: u64) {
        let need = isqrt(hi) + 1;
        if need <= self.limit {
            return;
        }
        let lim = need.max(self.limit * 2).max(1024);
        self.odd = small_primes(lim).into_iter().filter(|&p| p > 2).collect();
        self.limit = lim;
    }

    pub fn odd(&self) -> &[u64] {
        &self.odd
    }
}

pub fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Sieve segment `j`, writing a composite bitmap (bit set = composite).
pub fn sieve_segment(j: u64, seg: u64, base: &BasePrimes, bits: &mut Vec<u64>) {
    let words = (seg / 64) as usize;
    bits.clear();
    bits.resize(words, 0);
    let lo = 2 * j * seg + 1;
    let hi = lo + 2 * seg;
    if lo == 1 {
        bits[0] |= 1; // 1 is not prime
    }
    for &p in base.odd() {
        let pp = p * p;
        if pp >= hi {
            break;
        }
        let start = if pp >= lo {
            pp
        } else {
            // first odd multiple of p that is >= lo
            let m = lo.div_ceil(p) * p;
            if m % 2 == 0 {
                m + p
            } else {
                m
            }
        };
        let mut i = (start - lo) / 2;
        while i < seg {
            bits[(i >> 6) as usize] |= 1u64 << (i & 63);
            i += p;
        }
    }
}

/// Call `f` for every prime in segment `j` below `limit`, in order.
/// Returns `false` if `f` asked to stop.
pub fn for_each_prime_in_segment(
    j: u64,
    seg: u64,
    base: &BasePrimes,
    limit: u64,
    bits: &mut Vec<u64>,
    mut f: impl FnMut(u64) -> bool,
) -> bool {
    if j == 0 && limit >= 2 && !f(2) {
        return false;
    }
    sieve_segment(j, seg, base, bits);
    let lo = 2 * j * seg + 1;
    for (w, &word) in bits.iter().enumerate() {
        let mut free = !word;
        while free != 0 {
            let b = free.trailing_zeros() as u64;
            free &= free - 1;
            let n = lo + 2 * ((w as u64) * 64 + b);
            if n > limit {
                return true;
            }
            if !f(n) {
                return false;
            }
        }
    }
    true
}

/// Ordered, lazily sieved stream of primes up to `limit`.
pub struct PrimeStream {
    seg: u64,
    limit: u64,
    next_segment: u64,
    base: BasePrimes,
    bits: Vec<u64>,
    buf: Vec<u64>,
    pos: usize,
}

impl PrimeStream {
    /// Start at segment `first_segment` (0 for the beginning).
    pub fn new(limit: u64, seg: u64, first_segment: u64) -> Self {
        PrimeStream {
            seg,
            limit,
            next_segment: first_segment,
            base: BasePrimes::default(),
            bits: Vec::new(),
            buf: Vec::new(),
            pos: 0,
        }
    }

    /// Index of the next segment to be sieved; together with the segment
    /// size this is all the state needed to resume after the current buffer.
    pub fn next_segment(&self) -> u64 {
        self.next_segment
    }

    fn refill(&mut self) -> bool {
        loop {
            let (lo, hi) = (2 * self.next_segment * self.seg + 1, 2 * (self.next_segment + 1) * self.seg + 1);
            if lo > self.limit && !(self.next_segment == 0 && self.limit >= 2) {
                return false;
            }
            self.base.ensure(hi);
            self.buf.clear();
            self.pos = 0;
            let buf = &mut self.buf;
            for_each_prime_in_segment(self.next_segment, self.seg, &self.base, self.limit, &mut self.bits, |p| {
                buf.push(p);
                true
            });
            self.next_segment += 1;
            if !self.buf.is_empty() {
                return true;
            }
        }
    }
}

impl Iterator for PrimeStream {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        if self.pos >= self.buf.len() && !self.refill() {
            return None;
        }
        let p = self.buf[self.pos];
        self.pos += 1;
        Some(p)
    }
}

/// Primes `<= limit` in increasing order.
pub fn primes_stream(limit: u64, cfg: &SieveConfig) -> Result<PrimeStream> {
    if limit < 2 {
        return Err(Error::invalid(format!("limit must be at least 2, got {limit}")));
    }
    cfg.validate()?;
    Ok(PrimeStream::new(limit, cfg.segment_size, 0))
}

/// Number of primes `<= limit`, sieving segments on the worker pool.
pub fn prime_count(limit: u64, cfg: &SieveConfig) -> Result<u64> {
    cfg.validate()?;
    if limit < 2 {
        return Ok(0);
    }
    let seg = cfg.segment_size;
    let nseg = (limit - 1) / (2 * seg) + 1;
    let base = BasePrimes::covering(limit + 1);
    let counts = crate::par::with_threads(cfg.threads, || {
        crate::par::map_ordered((0..nseg).collect(), |j| {
            let mut bits = Vec::new();
            let mut c = 0u64;
            for_each_prime_in_segment(j, seg, &base, limit, &mut bits, |_| {
                c += 1;
                true
            });
            c
        })
    });
    Ok(counts.iter().sum())
}

/// The `k`-th prime (1-based).
pub fn nth_prime(k: u64) -> Result<u64> {
    if k == 0 {
        return Err(Error::invalid("nth_prime is 1-based"));
    }
    let kf = k as f64;
    // p_k < k (ln k + ln ln k) for k >= 6
    let bound = if k < 6 { 13 } else { (kf * (kf.ln() + kf.ln().ln())).ceil() as u64 + 1 };
    let mut c = 0;
    for p in PrimeStream::new(bound, MIN_SEGMENT, 0) {
        c += 1;
        if c == k {
            return Ok(p);
        }
    }
    unreachable!("prime bound for k = {k} too small")
}
