use num_bigint::BigUint;
use num_rational::BigRational;
use robin_core::arith::ExactRatio;
use robin_core::exceptions::*;
use robin_core::highprec::{euler_gamma, IntervalReal};

mod common;
use common::brute::brute_exceptions;

fn eps(n: i64, d: i64) -> ExactRatio {
    ExactRatio(BigRational::new(n.into(), d.into()))
}

#[test]
fn first_row_is_two_over_scaled_e_gamma() {
    let e = eps(1, 1771560);
    let t = beta_table_prefix(&e, 50, 1).unwrap();
    let g = euler_gamma(60).unwrap().exp().unwrap();
    let want = IntervalReal::from_int(2, 60)
        .div(&g.mul(&IntervalReal::from_ratio(&(&e.0 + BigRational::from_integer(1.into())), 60)))
        .unwrap();
    assert!(t.rows[0].loglog_n.overlaps(&want));
    assert!((t.rows[0].loglog_n.mid_f64() - 1.12292).abs() < 1e-5);
    let n1 = t.n_alpha(1).unwrap().mid_f64();
    assert!((n1 - 21.6).abs() < 0.1, "{n1}");
}

#[test]
fn alpha_one_exceptions_are_small_prime_powers() {
    // Only the first row of this table is needed; close it artificially by
    // enumerating from a prefix with beta_max set to 1.
    let e = eps(1, 1771560);
    let mut t = beta_table_prefix(&e, 50, 1).unwrap();
    t.beta_max = Some(1);
    let (recs, _) = enumerate_exceptions(&t, &EnumerationConfig::default()).unwrap();
    let ns: Vec<u64> = recs.iter().map(|r| r.n.to_string().parse().unwrap()).collect();
    assert_eq!(ns, vec![2, 3, 4, 5, 7, 8, 9, 11, 13, 16, 17, 19]);
}

#[test]
fn half_table_matches_direct_evaluation() {
    let e = eps(1, 2);
    let t = build_beta_table(&e, 50).unwrap();
    assert_eq!(t.beta_max, Some(4));
    let g = euler_gamma(60).unwrap().exp().unwrap();
    let scale = g.mul(&IntervalReal::from_ratio(&BigRational::new(3.into(), 2.into()), 60));
    let mut f = BigRational::from_integer(1.into());
    for (row, p) in t.rows.iter().zip([2i64, 3, 5, 7]) {
        f *= BigRational::new(p.into(), (p - 1).into());
        let direct = IntervalReal::from_ratio(&f, 60).div(&scale).unwrap();
        assert!(row.loglog_n.overlaps(&direct), "alpha {}", row.alpha);
        assert!(row.loglog_n.width().to_f64() < 1e-40);
    }
    assert_eq!(t.rows.len(), 4);
}

fn check_against_oracle(e: ExactRatio) {
    let t = build_beta_table(&e, 50).unwrap();
    let (recs, summary) = enumerate_exceptions(&t, &EnumerationConfig::default()).unwrap();
    let max_n: u64 = summary.max_n_alpha_floor.parse().unwrap();
    assert!(max_n <= 10_000_000);
    let got: Vec<u64> = {
        let mut v: Vec<u64> = recs.iter().map(|r| r.n.to_string().parse().unwrap()).collect();
        v.sort();
        v
    };
    // Scan well past the largest n_alpha.
    let want = brute_exceptions(&e, (2 * max_n as usize).max(1000));
    assert_eq!(got, want);
    for r in &recs {
        assert_eq!(r.factorization.omega() as u64, r.omega);
        assert_eq!(r.factorization.value(), r.n);
    }
}

#[test]
fn half_matches_brute_force() {
    check_against_oracle(eps(1, 2));
}

#[test]
fn quarter_matches_brute_force() {
    check_against_oracle(eps(1, 4));
}

#[test]
fn output_independent_of_threads() {
    let t = build_beta_table(&eps(1, 4), 50).unwrap();
    let run = |threads| {
        let cfg = EnumerationConfig { threads, ..Default::default() };
        let (recs, s) = enumerate_exceptions(&t, &cfg).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &recs).unwrap();
        (buf, serde_json::to_string(&s).unwrap())
    };
    assert_eq!(run(1), run(8));
}

#[test]
fn cap_refusal_names_alpha() {
    let t = build_beta_table(&eps(1, 10), 50).unwrap();
    let err = enumerate_exceptions(&t, &EnumerationConfig::default()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("alpha ="), "{msg}");
    assert!(msg.contains("1000000000"), "{msg}");
}

#[test]
fn candidate_cap_gives_resume_token() {
    let t = build_beta_table(&eps(1, 4), 50).unwrap();
    let cfg = EnumerationConfig { candidate_cap: 50, ..Default::default() };
    let mut first = Vec::new();
    let err = enumerate_exceptions_into(&t, &cfg, &mut |r| {
        first.push(r.n.clone());
        Ok(())
    })
    .unwrap_err();
    let token = match err {
        robin_core::Error::Capacity { resume: Some(t), .. } => t,
        e => panic!("{e}"),
    };
    let cfg2 = EnumerationConfig { resume: Some(token), ..Default::default() };
    let (rest, _) = enumerate_exceptions(&t, &cfg2).unwrap();
    first.extend(rest.into_iter().map(|r| r.n));
    let (all, _) = enumerate_exceptions(&t, &EnumerationConfig::default()).unwrap();
    let all: Vec<BigUint> = all.into_iter().map(|r| r.n).collect();
    assert_eq!(first, all);
}

#[test]
fn csv_shape() {
    let t = build_beta_table(&eps(1, 2), 50).unwrap();
    let (recs, s) = enumerate_exceptions(&t, &EnumerationConfig::default()).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, &recs).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.next(), Some("2,1,2^1,0.69314718055994530941,-inf"));
    assert_eq!(s.total as usize, recs.len());
    assert_eq!(s.table_digest.len(), 64);
}

#[test]
fn rejects_bad_epsilon() {
    assert!(build_beta_table(&eps(0, 1), 50).is_err());
    assert!(build_beta_table(&eps(1, 1), 50).is_err());
    assert!(build_beta_table(&eps(3, 2), 50).is_err());
}
