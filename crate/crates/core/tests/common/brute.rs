//! Brute-force oracles shared by the exception, CA and acceptance tests.

use num_rational::BigRational;
use robin_core::arith::ExactRatio;
use robin_core::highprec::{euler_gamma, IntervalReal};

/// Smallest-prime-factor table.
pub fn spf(limit: usize) -> Vec<u32> {
    let mut s = vec![0u32; limit + 1];
    for i in 2..=limit {
        if s[i] == 0 {
            let mut j = i;
            while j <= limit {
                if s[j] == 0 {
                    s[j] = i as u32;
                }
                j += i;
            }
        }
    }
    s
}

pub fn omega(mut n: usize, s: &[u32]) -> usize {
    let mut w = 0;
    while n > 1 {
        let p = s[n] as usize;
        w += 1;
        while n % p == 0 {
            n /= p;
        }
    }
    w
}

/// Every n <= limit with f(n) >= e^gamma (1+eps) log log n, from the definition.
pub fn brute_exceptions(e: &ExactRatio, limit: usize) -> Vec<u64> {
    let s = spf(limit);
    let primes: Vec<u64> = (2..=limit).filter(|&i| s[i] as usize == i).map(|i| i as u64).collect();
    let g = euler_gamma(60).unwrap().exp().unwrap();
    let scale = g.mul(&IntervalReal::from_ratio(&(&e.0 + BigRational::from_integer(1.into())), 60));
    let scale_f = scale.mid_f64();
    let mut f_f = vec![1.0f64];
    let mut f_exact = vec![BigRational::from_integer(1.into())];
    for &p in primes.iter().take(40) {
        let r = BigRational::new(p.into(), (p - 1).into());
        f_exact.push(f_exact.last().unwrap() * &r);
        f_f.push(f_f.last().unwrap() * p as f64 / (p - 1) as f64);
    }
    let mut out = Vec::new();
    for n in 2..=limit {
        let w = omega(n, &s);
        let lhs = f_f[w];
        let rhs = scale_f * (n as f64).ln().ln();
        let exc = if (lhs - rhs).abs() > 1e-9 * lhs.abs().max(1.0) {
            lhs >= rhs
        } else {
            let l = IntervalReal::from_int(n as u64, 60).ln().unwrap().ln().unwrap();
            let r = scale.mul(&l);
            let f = IntervalReal::from_ratio(&f_exact[w], 60);
            assert!(!f.overlaps(&r), "oracle undecided at {n}");
            f.lo() > r.hi()
        };
        if exc {
            out.push(n as u64);
        }
    }
    out
}

/// Maximizers of sigma(k)/k^(1+eps) over 2 <= k <= limit, for a grid of eps.
pub fn brute_force_ca(limit: usize) -> Vec<u64> {
    let mut sigma = vec![0u64; limit + 1];
    for d in 1..=limit {
        let mut m = d;
        while m <= limit {
            sigma[m] += d as u64;
            m += d;
        }
    }
    let ls: Vec<f64> = (0..=limit).map(|k| (sigma[k] as f64).ln()).collect();
    let lk: Vec<f64> = (0..=limit).map(|k| (k as f64).ln()).collect();
    let mut found = Vec::new();
    // The largest element below 10^6 takes over at eps ~ 0.0289 and is
    // overtaken near 0.0231, so the grid stops short of that.
    let steps = 2000;
    for i in 0..=steps {
        let eps = 0.0235 + (1.0 - 0.0235) * i as f64 / steps as f64;
        let mut best = (f64::NEG_INFINITY, 0usize);
        for k in 2..=limit {
            let v = ls[k] - (1.0 + eps) * lk[k];
            if v > best.0 {
                best = (v, k);
            }
        }
        if !found.contains(&(best.1 as u64)) {
            found.push(best.1 as u64);
        }
    }
    found.sort();
    found
}

