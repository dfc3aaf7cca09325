use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use serde_json::Value;

fn robin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_robin"));
    for v in ["ROBIN_PRECISION", "ROBIN_THREADS", "ROBIN_CHECKPOINT_DIR"] {
        c.env_remove(v);
    }
    c
}

fn run(args: &[&str]) -> Output {
    robin().args(args).output().expect("spawn robin")
}

fn json(args: &[&str]) -> (Value, i32) {
    let mut a = vec!["--format", "json"];
    a.extend_from_slice(args);
    let o = run(&a);
    let code = o.status.code().unwrap();
    assert!(o.status.success() || code == 1, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    (serde_json::from_slice(&o.stdout).expect("json on stdout"), code)
}

fn sigma(n: u64) -> u64 {
    (1..=n).filter(|d| n % d == 0).sum()
}

#[test]
fn constants_pass() {
    let (v, code) = json(&["constants"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["all_passed"], true);
    assert_eq!(v["command"], "constants");
}

#[test]
fn factor_matches_enumeration() {
    for n in [1u64, 2, 12, 5040, 55440, 997 * 991] {
        let (v, code) = json(&["factor", &n.to_string()]);
        assert_eq!(code, 0);
        let r = &v["result"];
        assert_eq!(r["n"], n.to_string());
        let s = sigma(n);
        let g = num_integer_gcd(s, n);
        let want = format!("{}/{}", s / g, n / g);
        assert_eq!(r["sigma_over_n"], want, "n = {n}");
    }
    let (v, _) = json(&["factor", "2^25*3^2"]);
    assert_eq!(v["result"]["n"], (9u64 << 25).to_string());
}

fn num_integer_gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[test]
fn robin_single_values() {
    let (v, code) = json(&["robin", "5040"]);
    // a known violator is a result, not a failure of the tool
    assert_eq!(code, 0);
    assert_eq!(v["result"]["verdict"], "Fails");
    let (v, _) = json(&["robin", "5041"]);
    assert_eq!(v["result"]["verdict"], "Holds");
    let (v, _) = json(&["robin", "2"]);
    assert_eq!(v["result"]["out_of_domain"], true);
}

#[test]
fn range_violators_match_oracle() {
    let hi = 20_000u64;
    let mut sig = vec![0u64; hi as usize + 1];
    for d in 1..=hi {
        for m in (d..=hi).step_by(d as usize) {
            sig[m as usize] += d;
        }
    }
    let eg = 1.781_072_417_990_197_9f64;
    let want: Vec<u64> = (3..=hi)
        .filter(|&n| sig[n as usize] as f64 / n as f64 >= eg * (n as f64).ln().ln())
        .collect();
    let (v, code) = json(&["robin", "--range", "3", &hi.to_string()]);
    assert_eq!(code, 0);
    let got: Vec<u64> = v["result"]["violators"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect();
    assert_eq!(got, want);
    assert_eq!(*got.last().unwrap(), 5040);

    let (v, code) = json(&["robin", "--range", "5041", "200000", "--bound", "unconditional"]);
    assert_eq!(code, 0);
    assert!(v["result"]["violators"].as_array().unwrap().is_empty());
}

#[test]
fn classify_family_witness() {
    let (v, code) = json(&["classify", "--factored", "2^20*3^13*5^8*7^7*11^6"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["guaranteed"], false);
    let (v, _) = json(&["classify", "--factored", "2^21*3^13*5^8*7^7*11^6"]);
    assert_eq!(v["result"]["guaranteed"], true);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["factor", "0"]).status.code(), Some(2));
    assert_eq!(run(&["factor", "abc"]).status.code(), Some(2));
    assert_eq!(run(&["--precision", "5", "robin", "7"]).status.code(), Some(2));
    assert_eq!(run(&["beta-max", "--epsilon", "0"]).status.code(), Some(2));
    assert_eq!(run(&["beta-max", "--epsilon", "-1/3"]).status.code(), Some(2));
    assert_eq!(run(&["ca", "--max-loglog", "30"]).status.code(), Some(4));
    assert_eq!(run(&["robin", "--range", "2", "100", "--scan-cap", "50"]).status.code(), Some(4));
    // clap usage errors
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn env_overrides_and_flags() {
    let o = robin().env("ROBIN_THREADS", "3").env("ROBIN_PRECISION", "45").args(["--format", "json", "robin", "7"]).output().unwrap();
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["threads"], 3);
    assert_eq!(v["config"]["precision"], 45);
    let o = robin().env("ROBIN_THREADS", "3").args(["--format", "json", "--threads", "2", "robin", "7"]).output().unwrap();
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["threads"], 2);
    let o = robin().env("ROBIN_THREADS", "0").args(["robin", "7"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_formats() {
    let o = run(&["--format", "csv", "factor", "12"]);
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.starts_with("key,value\n"));
    assert!(s.contains("result.sigma_over_n,7/3\n"));
    let o = run(&["factor", "12"]);
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.contains("sigma_over_n: 7/3\n"));
}

fn result_of(args: &[&str], threads: &str) -> Value {
    let mut a = vec!["--threads", threads];
    a.extend_from_slice(args);
    let (v, _) = json(&a);
    v["result"].clone()
}

#[test]
fn artifacts_independent_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = Vec::new();
    for t in ["1", "4"] {
        let out = dir.path().join(format!("ex{t}.csv"));
        let r = result_of(&["exceptions", "--epsilon", "1/4", "--out", out.to_str().unwrap()], t);
        csv.push((std::fs::read(&out).unwrap(), r["summary"].clone()));
        let ca = dir.path().join(format!("ca{t}.csv"));
        let r = result_of(&["ca", "--max-loglog", "8", "--out", ca.to_str().unwrap(), "--gap-check", "--gap-limit", "1000000"], t);
        csv.push((std::fs::read(&ca).unwrap(), r));
    }
    assert_eq!(csv[0], csv[2]);
    assert_eq!(csv[1], csv[3]);
    assert_eq!(
        result_of(&["beta-max", "--epsilon", "1/1000", "--overshoot", "20000"], "1"),
        result_of(&["beta-max", "--epsilon", "1/1000", "--overshoot", "20000"], "4")
    );
    assert_eq!(
        result_of(&["robin", "--range", "2", "300000"], "1"),
        result_of(&["robin", "--range", "2", "300000"], "4")
    );
}

#[test]
fn exceptions_resume_appends() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full.csv");
    let part = dir.path().join("part.csv");
    json(&["exceptions", "--epsilon", "1/4", "--out", full.to_str().unwrap()]);
    let o = run(&["exceptions", "--epsilon", "1/4", "--out", part.to_str().unwrap(), "--candidate-cap", "100"]);
    assert_eq!(o.status.code(), Some(4));
    let err = String::from_utf8(o.stderr).unwrap();
    let token = err.lines().find_map(|l| l.strip_prefix("resume point: ")).expect("resume token").to_string();
    json(&["exceptions", "--epsilon", "1/4", "--out", part.to_str().unwrap(), "--resume", &token, "--candidate-cap", "100"]);
    assert_eq!(std::fs::read(&full).unwrap(), std::fs::read(&part).unwrap());
    assert!(Path::new(&format!("{}.json", part.display())).exists());
}

const BETA_ARGS: [&str; 6] = ["beta-max", "--epsilon", "1/100000", "--segment-size", "65536", "--checkpoint-every"];

#[test]
fn beta_max_kill_and_resume() {
    let (want, _) = json(&BETA_ARGS.iter().copied().chain(["4"]).collect::<Vec<_>>());
    let want = &want["result"];
    assert_eq!(want["beta_max"], 6572964);

    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("beta-1-100000.rbl");
    let mut child = robin()
        .args(BETA_ARGS)
        .arg("2")
        .arg("--checkpoint-dir")
        .arg(dir.path())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    // kill once a checkpoint exists and the run has moved past it
    let start = Instant::now();
    let mut first = None;
    loop {
        std::thread::sleep(Duration::from_millis(20));
        if let Ok(m) = std::fs::metadata(&ckpt).and_then(|m| m.modified()) {
            match first {
                None => first = Some(m),
                Some(f) if m != f => break,
                _ => {}
            }
        }
        assert!(child.try_wait().unwrap().is_none(), "run finished before it could be killed");
        assert!(start.elapsed() < Duration::from_secs(120));
    }
    child.kill().unwrap();
    child.wait().unwrap();

    let o = robin()
        .args(["--format", "json"])
        .args(BETA_ARGS)
        .args(["2", "--resume", "--checkpoint-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("resumed from segment"));
    let got: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(&got["result"], want);
}

#[test]
fn beta_max_segment_budget_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let base = ["beta-max", "--epsilon", "1/20000", "--overshoot", "50000", "--segment-size", "65536", "--checkpoint-every", "1", "--checkpoint-dir", d];
    let (want, _) = json(&base[..7]);
    let mut rounds = 0;
    let got = loop {
        let mut a: Vec<&str> = base.to_vec();
        a.extend(["--max-segments", "3"]);
        if rounds > 0 {
            a.push("--resume");
        }
        let mut full = vec!["--format", "json"];
        full.extend(a);
        let o = run(&full);
        rounds += 1;
        match o.status.code() {
            Some(0) => break serde_json::from_slice::<Value>(&o.stdout).unwrap(),
            Some(4) => assert!(rounds < 100),
            c => panic!("exit {c:?}: {}", String::from_utf8_lossy(&o.stderr)),
        }
    };
    assert!(rounds > 1);
    assert_eq!(got["result"], want["result"]);
    // resuming the same file with another segment size is refused
    let other = run(&["beta-max", "--epsilon", "1/20000", "--segment-size", "131072", "--resume", "--checkpoint-dir", d]);
    assert_eq!(other.status.code(), Some(2));
}
