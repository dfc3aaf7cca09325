use num_bigint::BigUint;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use robin_core::arith::{
    factorize, factorize_u128, is_prime_u128, lemma1_product, n_over_phi, p_adic_order, robin_check,
    sigma_over_n, ExactRatio, Factorization, Verdict,
};
use robin_core::Error;

fn f(n: u128) -> Factorization {
    factorize(&BigUint::from(n)).unwrap()
}

fn r(a: i64, b: i64) -> ExactRatio {
    ExactRatio::new(a, b).unwrap()
}

fn divisor_sum(n: u64) -> u64 {
    let mut s = 0;
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            s += d;
            if d * d != n {
                s += n / d;
            }
        }
        d += 1;
    }
    s
}

fn totient(n: u64) -> u64 {
    (1..=n).filter(|&k| num_integer::gcd(k, n) == 1).count() as u64
}

#[test]
fn factorize_examples() {
    assert_eq!(f(1).factors(), &[]);
    assert_eq!(f(5040).factors(), &[(2, 4), (3, 2), (5, 1), (7, 1)]);
    assert_eq!(f(3 << 20).factors(), &[(2, 20), (3, 1)]);
    assert!(matches!(factorize(&BigUint::from(0u32)), Err(Error::InvalidArgument(_))));
    assert!(matches!(factorize(&(BigUint::from(1u32) << 81)), Err(Error::Capacity { .. })));
    // largest accepted size, a product of two primes near 2^40
    let p = (1u128 << 40) - 87;
    let q = (1u128 << 40) - 167;
    assert!(is_prime_u128(p) && is_prime_u128(q));
    assert_eq!(f(p * q).factors(), &[(q, 1), (p, 1)]);
}

#[test]
fn factorization_round_trips() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(1);
    let primes: Vec<u128> = (2..2000u128).filter(|&p| is_prime_u128(p)).collect();
    for _ in 0..2000 {
        let k = rng.random_range(1..6);
        let mut ps: Vec<u128> = (0..k).map(|_| primes[rng.random_range(0..primes.len())]).collect();
        ps.sort();
        ps.dedup();
        let fac: Vec<(u128, u64)> = ps.iter().map(|&p| (p, rng.random_range(1..4))).collect();
        let g = Factorization::new(fac).unwrap();
        if g.value().bits() > 81 {
            assert!(matches!(factorize(&g.value()), Err(Error::Capacity { .. })));
            continue;
        }
        assert_eq!(factorize(&g.value()).unwrap(), g);
    }
    for _ in 0..2000 {
        let n: u128 = rng.random_range(1..1u128 << 62);
        let g = factorize_u128(n);
        assert_eq!(g.value_u128(), Some(n));
        assert!(g.factors().windows(2).all(|w| w[0].0 < w[1].0));
        assert!(g.factors().iter().all(|&(p, a)| a >= 1 && is_prime_u128(p)));
    }
}

#[test]
fn ratio_examples() {
    assert_eq!(sigma_over_n(&f(12)), r(7, 3));
    assert_eq!(n_over_phi(&f(12)), r(3, 1));
    assert_eq!(sigma_over_n(&f(1)), ExactRatio::one());
    assert_eq!(n_over_phi(&f(1)), ExactRatio::one());
    assert_eq!(lemma1_product(&f(12)), r(7, 9));
    assert_eq!(lemma1_product(&f(2)), r(3, 4));
    assert_eq!(n_over_phi(&f(2)).mul(&lemma1_product(&f(2))), r(3, 2));
    let l = lemma1_product(&f(5040));
    assert_eq!(l.mul(&n_over_phi(&f(5040))), r(divisor_sum(5040) as i64, 5040));
    assert_eq!(divisor_sum(5040), 19344);
}

#[test]
fn small_ratios_match_enumeration() {
    for n in 1..3000u64 {
        let g = f(n as u128);
        assert_eq!(sigma_over_n(&g), r(divisor_sum(n) as i64, n as i64));
        assert_eq!(n_over_phi(&g), r(n as i64, totient(n) as i64));
    }
}

#[test]
fn lemma1_identity_on_random_inputs() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(2);
    for _ in 0..100_000 {
        let n: u128 = rng.random_range(1..=1_000_000_000_000u128);
        let g = factorize_u128(n);
        let lhs = sigma_over_n(&g);
        assert_eq!(lhs, n_over_phi(&g).mul(&lemma1_product(&g)), "n = {n}");
    }
}

#[test]
fn sigma_ratio_is_multiplicative() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(4);
    let mut tested = 0;
    while tested < 5000 {
        let a: u128 = rng.random_range(1..1_000_000);
        let b: u128 = rng.random_range(1..1_000_000);
        if num_integer::gcd(a, b) != 1 {
            continue;
        }
        tested += 1;
        let ab = sigma_over_n(&f(a * b));
        assert_eq!(ab, sigma_over_n(&f(a)).mul(&sigma_over_n(&f(b))));
    }
}

#[test]
fn p_adic_order_examples() {
    assert_eq!(p_adic_order(&f(48), 2).unwrap(), 4);
    assert_eq!(p_adic_order(&f(48), 5).unwrap(), 0);
    let g = Factorization::new(vec![(2, 19), (11, 6)]).unwrap();
    assert_eq!(p_adic_order(&g, 11).unwrap(), 6);
    assert!(matches!(p_adic_order(&g, 4), Err(Error::InvalidArgument(_))));
}

#[test]
fn robin_examples() {
    let o = robin_check(&f(5040), 50).unwrap();
    assert_eq!(o.verdict, Verdict::Fails);
    assert!((o.sigma_ratio.mid_f64() - 19344.0 / 5040.0).abs() < 1e-12);
    let rhs = 0.577_215_664_901_532_9_f64.exp() * 5040f64.ln().ln();
    assert!((o.rhs.unwrap().mid_f64() - rhs).abs() < 1e-12);
    let o = robin_check(&f(5041), 50).unwrap();
    assert_eq!(o.verdict, Verdict::Holds);
    assert!((o.sigma_ratio.mid_f64() - 5113.0 / 5041.0).abs() < 1e-12);
    assert_eq!(robin_check(&f(10080), 50).unwrap().verdict, Verdict::Holds);
    for n in [1, 2] {
        let o = robin_check(&f(n), 50).unwrap();
        assert_eq!(o.verdict, Verdict::Fails);
        assert!(o.out_of_domain && o.rhs.is_none());
    }
    assert!(!robin_check(&f(3), 50).unwrap().out_of_domain);
}

#[test]
fn robin_matches_enumeration_to_1e5() {
    let n_max = 100_000usize;
    let mut sigma = vec![0u64; n_max + 1];
    for d in 1..=n_max {
        for m in (d..=n_max).step_by(d) {
            sigma[m] += d as u64;
        }
    }
    let eg = 0.577_215_664_901_532_9_f64.exp();
    let mut fails = Vec::new();
    for n in 3..=n_max {
        let lhs = sigma[n] as f64 / n as f64;
        let rhs = eg * (n as f64).ln().ln();
        assert!((lhs - rhs).abs() > 1e-9 * rhs, "too close for the f64 oracle at {n}");
        let want = if lhs < rhs { Verdict::Holds } else { Verdict::Fails };
        let got = robin_check(&factorize_u128(n as u128), 60).unwrap().verdict;
        assert_eq!(got, want, "n = {n}");
        if got == Verdict::Fails {
            fails.push(n);
        }
    }
    assert_eq!(*fails.last().unwrap(), 5040);
    assert_eq!(fails.len(), 26);
}

#[test]
fn exact_ratio_parsing() {
    assert_eq!(ExactRatio::parse("1/1771560").unwrap(), r(1, 1_771_560));
    assert_eq!(ExactRatio::parse("6/4").unwrap(), r(3, 2));
    assert_eq!(ExactRatio::parse("0.25").unwrap().0, BigRational::new(1.into(), 4.into()));
    assert!(ExactRatio::parse("1/0").is_err());
    assert!(ExactRatio::new(1, 0).is_err());
}
