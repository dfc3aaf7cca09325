//! One line per acceptance criterion. Criterion 1 (the full beta_max run,
//! primes up to about 2.1e10) only runs with `ROBIN_FULL_REPRO=1`; it
//! checkpoints to `$ROBIN_FULL_REPRO_CKPT` (default: the system temp dir) and
//! resumes from there when restarted.

mod common;

use std::io::Write;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use rand::{Rng, SeedableRng};
use robin_core::arith::{factorize_u128, lemma1_product, n_over_phi, sigma_over_n, ExactRatio, Verdict};
use robin_core::ca::{ca_sequence, gap_check_all, verify_robin_on_ca, CaConfig, CaSummary};
use robin_core::exceptions::{build_beta_table, enumerate_exceptions, write_csv, EnumerationConfig};
use robin_core::families::{nu2_condition_holds, nu2_threshold, verify_proof_constants};
use robin_core::highprec::{compare, CertifiedOrder, IntervalReal};
use robin_core::primes::{find_beta_max_with, BetaSearchOptions, SieveConfig};
use robin_core::scan::{robin_scan, unconditional_scan, ScanConfig};
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn oracle_band(v: &BigInt) -> IntervalReal {
    let (lo, hi) = common::band(v, 300);
    IntervalReal::from_ratio(&lo, 100).hull(&IntervalReal::from_ratio(&hi, 100))
}

fn criterion_1() -> Option<Outcome> {
    if std::env::var("ROBIN_FULL_REPRO").ok().as_deref() != Some("1") {
        return None;
    }
    Some((|| {
        let eps = ExactRatio::new(1, 1_771_560).unwrap();
        let ckpt = std::env::var("ROBIN_FULL_REPRO_CKPT")
            .map(std::path::PathBuf::from)
            .unwrap_or_else(|_| std::env::temp_dir().join("robin-beta-1771560.ckpt"));
        let cfg = SieveConfig {
            checkpoint_path: Some(ckpt),
            ..SieveConfig::default()
        };
        let opts = BetaSearchOptions {
            resume: true,
            ..BetaSearchOptions::default()
        };
        let r = find_beta_max_with(&eps, &cfg, 50, &opts).map_err(e)?;
        let lo = IntervalReal::from_decimal("23.762143", 50).unwrap();
        let hi = IntervalReal::from_decimal("23.762144", 50).unwrap();
        let ll = &r.loglog_n_beta_max;
        let detail = format!(
            "beta_max = {}, p = {}, loglog n = {}, reversals {:?}",
            r.beta_max,
            r.p_beta_max,
            ll.midpoint_string(16),
            r.reversals
        );
        ensure(r.beta_max == 919_356_256, format!("expected beta_max 919356256; {detail}"))?;
        ensure(
            compare(ll, &lo) != CertifiedOrder::Less && compare(ll, &hi) == CertifiedOrder::Less,
            format!("loglog n outside [23.762143, 23.762144); {detail}"),
        )?;
        Ok(detail)
    })())
}

/// Serialized beta results for 1/2, 1/10, 1/100.
fn beta_artifacts(threads: usize) -> Result<Vec<String>, String> {
    [2i64, 10, 100]
        .iter()
        .map(|&d| {
            let eps = ExactRatio::new(1, d).unwrap();
            let o = BetaSearchOptions {
                overshoot_primes: 100_000,
                ..BetaSearchOptions::default()
            };
            let r = find_beta_max_with(&eps, &SieveConfig::default().with_threads(threads), 50, &o).map_err(e)?;
            serde_json::to_string(&r).map_err(e)
        })
        .collect()
}

fn criterion_2() -> Outcome {
    let mut parts = Vec::new();
    for d in [2i64, 10, 100] {
        let eps = ExactRatio::new(1, d).unwrap();
        let (beta, loglog) = common::direct_beta(&eps.0);
        let o = BetaSearchOptions {
            overshoot_primes: 100_000,
            ..BetaSearchOptions::default()
        };
        let r = find_beta_max_with(&eps, &SieveConfig::default(), 50, &o).map_err(e)?;
        ensure(r.beta_max == beta, format!("eps 1/{d}: engine {} vs direct {beta}", r.beta_max))?;
        ensure(r.loglog_n_beta_max.overlaps(&oracle_band(&loglog)), format!("eps 1/{d}: loglog enclosures disjoint"))?;
        ensure(r.reversals.is_empty(), format!("eps 1/{d}: reversals {:?}", r.reversals))?;
        parts.push(format!("1/{d} -> {beta}"));
    }
    Ok(parts.join(", "))
}

fn exception_artifacts(threads: usize) -> Result<Vec<(Vec<u8>, String)>, String> {
    [2i64, 4]
        .iter()
        .map(|&d| {
            let t = build_beta_table(&ExactRatio::new(1, d).unwrap(), 50).map_err(e)?;
            let cfg = EnumerationConfig {
                threads,
                ..EnumerationConfig::default()
            };
            let (recs, s) = enumerate_exceptions(&t, &cfg).map_err(e)?;
            let mut csv = Vec::new();
            write_csv(&mut csv, &recs).map_err(e)?;
            Ok((csv, serde_json::to_string(&s).map_err(e)?))
        })
        .collect()
}

fn criterion_3() -> Outcome {
    let mut parts = Vec::new();
    for d in [2i64, 4] {
        let eps = ExactRatio::new(1, d).unwrap();
        let t = build_beta_table(&eps, 50).map_err(e)?;
        let (recs, s) = enumerate_exceptions(&t, &EnumerationConfig::default()).map_err(e)?;
        let max_n: u64 = s.max_n_alpha_floor.parse().map_err(e)?;
        ensure(max_n <= 10_000_000, format!("eps 1/{d}: max n_alpha {max_n} above 10^7"))?;
        let mut got: Vec<u64> = recs.iter().map(|r| r.n.to_string().parse().unwrap()).collect();
        got.sort();
        let want = common::brute::brute_exceptions(&eps, (2 * max_n as usize).max(1000));
        ensure(got == want, format!("eps 1/{d}: {} enumerated vs {} brute force", got.len(), want.len()))?;
        parts.push(format!("1/{d}: {} exceptions, max n_alpha {max_n}", got.len()));
    }
    Ok(parts.join("; "))
}

fn criterion_4() -> Outcome {
    let cfg = ScanConfig::default();
    let small = robin_scan(2, 5040, &cfg).map_err(e)?;
    ensure(small.violators.iter().max() == Some(&5040), format!("max violator {:?}", small.violators.iter().max()))?;
    ensure(small.undecided.is_empty(), "undecided below 5040")?;
    let big = robin_scan(5041, 100_000_000, &cfg).map_err(e)?;
    ensure(big.violators.is_empty(), format!("violators {:?}", big.violators))?;
    ensure(big.undecided.is_empty(), format!("undecided {:?}", big.undecided))?;
    ensure(big.checked == 100_000_000 - 5040, "range not fully checked")?;
    let m = big.min_margin.as_ref().ok_or("no margin")?;
    ensure(m.is_positive(), "margin not positive")?;
    Ok(format!(
        "{} violators in [2, 5040]; none in [5041, 10^8], min margin {} at {}, {} escalations",
        small.violators.len(),
        m.midpoint_string(6),
        big.min_margin_at.unwrap(),
        big.escalations
    ))
}

/// Streams the CA verification, returning the artifact digest (CSV rows and
/// summary JSON), the summary, the number of rows above 5040 and the indices
/// of those without a certified positive margin.
fn ca_run(threads: usize, max_ll: f64) -> Result<(String, CaSummary, u64, Vec<u64>), String> {
    let cfg = CaConfig {
        threads,
        ..CaConfig::default()
    };
    let mut h = Sha256::new();
    let mut above = 0u64;
    let mut bad = Vec::new();
    let s = verify_robin_on_ca(max_ll, &cfg, &mut |r| {
        h.update(r.csv_line().as_bytes());
        h.update(b"\n");
        if r.above_5040 {
            above += 1;
            let ok = r.verdict == Verdict::Holds && r.margin.as_ref().is_some_and(|m| m.is_positive());
            if !ok {
                bad.push(r.index);
            }
        }
        Ok(())
    })
    .map_err(e)?;
    h.update(serde_json::to_string(&s).map_err(e)?.as_bytes());
    let digest = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    Ok((digest, s, above, bad))
}

static CA_DIGEST: OnceLock<String> = OnceLock::new();

fn criterion_5() -> Outcome {
    let first: Vec<u64> = ca_sequence(21.0, 100)
        .map_err(e)?
        .take(10)
        .map(|c| c.map(|c| c.value().unwrap().try_into().unwrap()))
        .collect::<Result<_, _>>()
        .map_err(e)?;
    let oracle = common::brute::brute_force_ca(1_000_000);
    ensure(first == oracle, format!("first ten {first:?} vs oracle {oracle:?}"))?;
    ensure(first == [2, 6, 12, 60, 120, 360, 2520, 5040, 55440, 720720], "unexpected first ten")?;
    let (digest, s, above, bad) = ca_run(1, 20.0)?;
    CA_DIGEST.set(digest).ok();
    ensure(bad.is_empty(), format!("elements without a certified positive margin: {bad:?}"))?;
    ensure(s.clean(), "summary reports failures or undecided")?;
    let m = s.min_margin_above_5040.as_ref().ok_or("no margin")?;
    ensure(m.is_positive(), "minimum margin not positive")?;
    Ok(format!(
        "{} elements up to loglog n = {:.4}, {above} above 5040 all hold, min margin {} at index {}",
        s.count,
        s.last_loglog_n,
        m.midpoint_string(6),
        s.min_margin_index.unwrap()
    ))
}

fn criterion_6() -> Outcome {
    let reports = gap_check_all(100_000_000, &ScanConfig::default()).map_err(e)?;
    let checked: u64 = reports.iter().map(|g| g.checked).sum();
    for g in &reports {
        ensure(g.violators_above_5040.is_empty(), format!("gap ({}, {}]: {:?}", g.n1, g.n2, g.violators_above_5040))?;
        ensure(g.undecided.is_empty(), format!("gap ({}, {}]: undecided", g.n1, g.n2))?;
    }
    let last = reports.last().ok_or("no gaps")?;
    Ok(format!("{} gaps up to {}, {checked} integers, no violators above 5040", reports.len(), last.n2))
}

fn criterion_7() -> Outcome {
    let r = verify_proof_constants();
    let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    ensure(r.all_passed && failed.is_empty(), format!("failed: {failed:?}"))?;
    Ok(format!("{} exact checks", r.checks.len()))
}

fn criterion_8() -> Outcome {
    // threshold oracle: ((19 ln 2 + ln c)^(1048576/1048575) - ln c) / ln 2 at c = 1
    let l = common::ln2() * 19;
    let lnl = common::ln(&common::to_ratio(&l));
    let pow = common::mul(&l, &common::exp(&(lnl / 1_048_575)));
    let rhs = common::div(&pow, &common::ln2());
    let want = (rhs >> common::BITS) + 1;
    let one = BigUint::from(1u32);
    let t = nu2_threshold(&one, 50).map_err(e)?;
    ensure(BigInt::from(t.minimal_k) == want, format!("minimal k {} vs oracle {want}", t.minimal_k))?;
    ensure(t.minimal_k == 20, format!("regression value changed: {}", t.minimal_k))?;
    ensure(nu2_condition_holds(t.minimal_k, &one, 50).map_err(e)?, "k fails")?;
    ensure(!nu2_condition_holds(t.minimal_k - 1, &one, 50).map_err(e)?, "k - 1 holds")?;

    let mut rng = rand::rngs::StdRng::seed_from_u64(2);
    for _ in 0..100_000 {
        let n: u128 = rng.random_range(1..=1_000_000_000_000u128);
        let f = factorize_u128(n);
        ensure(sigma_over_n(&f) == n_over_phi(&f).mul(&lemma1_product(&f)), format!("identity fails at {n}"))?;
    }
    Ok(format!("minimal k = {} (rhs {}), identity on 10^5 samples", t.minimal_k, t.rhs.midpoint_string(12)))
}

fn criterion_9() -> Outcome {
    let r = unconditional_scan(5041, 10_000_000, &ScanConfig::default()).map_err(e)?;
    ensure(r.violators.is_empty(), format!("violators {:?}", r.violators))?;
    ensure(r.undecided.is_empty(), format!("undecided {:?}", r.undecided))?;
    ensure(r.checked == 10_000_000 - 5040, "range not fully checked")?;
    Ok(format!(
        "(5040, 10^7] clean, min margin {}",
        r.min_margin.as_ref().map(|m| m.midpoint_string(6)).unwrap_or_default()
    ))
}

fn criterion_10() -> Outcome {
    ensure(beta_artifacts(1)? == beta_artifacts(8)?, "beta artifacts differ")?;
    ensure(exception_artifacts(1)? == exception_artifacts(8)?, "exception artifacts differ")?;
    let one = match CA_DIGEST.get() {
        Some(d) => d.clone(),
        None => ca_run(1, 20.0)?.0,
    };
    ensure(one == ca_run(8, 20.0)?.0, "CA artifacts differ")?;
    Ok("beta, exceptions and CA artifacts identical at 1 and 8 threads".into())
}

fn report(n: u32, out: &Outcome) {
    let line = match out {
        Ok(d) => format!("criterion {n}: PASS ({d})"),
        Err(d) => format!("criterion {n}: FAIL ({d})"),
    };
    // bypass the harness's capture so the lines land in the log
    let mut so = std::io::stdout();
    writeln!(so, "{line}").unwrap();
    so.flush().unwrap();
}

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    match criterion_1() {
        None => {
            let mut so = std::io::stdout();
            writeln!(so, "criterion 1: SKIPPED (opt-in, set ROBIN_FULL_REPRO=1)").unwrap();
        }
        Some(out) => {
            report(1, &out);
            if out.is_err() {
                failed.push(1);
            }
        }
    }
    let rest: [(u32, fn() -> Outcome); 9] = [
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    for (n, f) in rest {
        let t = std::time::Instant::now();
        let out = f().map(|d| format!("{d}; {:.1}s", t.elapsed().as_secs_f64()));
        report(n, &out);
        if out.is_err() {
            failed.push(n);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
