//! Deterministic primality and factor finding for integers below 2^81.

use ethnum::U256;

/// Largest integer accepted by [`crate::arith::factorize`] (exclusive).
pub const FACTOR_CEILING_BITS: u32 = 81;

/// Witness set that is deterministic for all n < 3.3e24 (> 2^81).
const MR_BASES: [u128; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];

#[inline]
fn mulmod(a: u128, b: u128, m: u128) -> u128 {
    if (a | b) >> 64 == 0 {
        return (a * b) % m;
    }
    ((U256::from(a) * U256::from(b)) % U256::from(m)).as_u128()
}

fn powmod(mut b: u128, mut e: u128, m: u128) -> u128 {
    let mut r = 1u128 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic for `n < 2^81`; panics above that.
pub fn is_prime_u128(n: u128) -> bool {
    assert!(n >> FACTOR_CEILING_BITS == 0, "primality test limited to n < 2^81");
    if n < 2 {
        return false;
    }
    for &p in &MR_BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &MR_BASES {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Brent's variant of Pollard rho; `n` odd, composite, not a prime power of
/// a small prime. Returns a nontrivial factor.
pub(crate) fn pollard_rho(n: u128) -> u128 {
    let mut c = 1u128;
    loop {
        let f = |x: u128| (mulmod(x, x, n) + c) % n;
        let (mut x, mut y, mut g, mut r, mut q) = (2u128, 2u128, 1u128, 1u64, 1u128);
        let mut ys = y;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                let lim = 128.min(r - k);
                for _ in 0..lim {
                    y = f(y);
                    q = mulmod(q, x.abs_diff(y), n);
                }
                g = gcd(q, n);
                k += lim;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = gcd(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}
