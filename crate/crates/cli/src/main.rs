mod config;
mod output;

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde_json::{json, Value};

use robin_core::arith::{
    factorize, lemma1_product, n_over_phi, robin_check, sigma_over_n, ExactRatio, Factorization, Verdict,
};
use robin_core::ca::{gap_check_all, verify_robin_on_ca, CaConfig, CA_CSV_HEADER};
use robin_core::exceptions::{build_beta_table, csv_line, enumerate_exceptions_into, EnumerationConfig, CSV_HEADER};
use robin_core::families::{classify, nu2_threshold_factored, odd_part_bound_check_factored, verify_proof_constants};
use robin_core::primes::{find_beta_max_with, BetaSearchOptions, SieveConfig, MIN_SEGMENT};
use robin_core::scan::{scan, ScanConfig, ScanKind};
use robin_core::{Error, Result};

use config::RunConfig;
use output::{emit, envelope};

#[derive(Parser)]
#[command(name = "robin", version, about = "Certified checks around Robin's inequality")]
struct Cli {
    #[command(flatten)]
    cfg: RunConfig,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Bound {
    /// sigma(n)/n < e^gamma log log n
    Robin,
    /// sigma(n)/n < 1.0000005645 e^gamma log log n, n > 5040
    Unconditional,
    /// odd c: sigma(c)/c < (524288/1048575) e^gamma log log(2^19 c)
    OddPart,
}

#[derive(Subcommand)]
enum Cmd {
    /// Factorization, sigma(n)/n, n/phi(n), omega and p-adic orders.
    Factor {
        /// Decimal integer, or a factored form like 2^25*3^2.
        n: String,
    },
    /// Robin's inequality for one n, or every n in a range.
    Robin {
        /// Decimal integer or factored form.
        n: Option<String>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], conflicts_with = "n")]
        range: Option<Vec<u64>>,
        /// Inequality checked over a range.
        #[arg(long, value_enum, default_value = "robin", requires = "range")]
        bound: Bound,
        /// Also write the violators, one per line.
        #[arg(long, requires = "range")]
        violators_out: Option<PathBuf>,
    },
    /// First beta at which the primorial reaches n_beta.
    BetaMax {
        #[arg(long)]
        epsilon: String,
        /// Continue from the checkpoint in --checkpoint-dir.
        #[arg(long)]
        resume: bool,
        /// Primes past the crossing that must keep the predicate true.
        #[arg(long, default_value_t = 1 << 20)]
        overshoot: u64,
        /// Odd numbers per sieve segment.
        #[arg(long, default_value_t = 1 << 20)]
        segment_size: u64,
        /// Segments between checkpoints.
        #[arg(long, default_value_t = 512)]
        checkpoint_every: u64,
        /// Stop after this many segments (resumable).
        #[arg(long)]
        max_segments: Option<u64>,
    },
    /// Every exception to f(n) < e^gamma (1+eps) log log n.
    Exceptions {
        #[arg(long)]
        epsilon: String,
        /// CSV output; a JSON sidecar is written next to it.
        #[arg(long)]
        out: PathBuf,
        /// Token printed by an earlier run that hit the candidate cap.
        #[arg(long)]
        resume: Option<String>,
    },
    /// Colossally abundant numbers: Robin's inequality on each, optional gap scan.
    Ca {
        #[arg(long)]
        max_loglog: f64,
        /// Scan every integer between consecutive elements up to --gap-limit.
        #[arg(long)]
        gap_check: bool,
        #[arg(long, default_value_t = 100_000_000)]
        gap_limit: u64,
        /// Per-element CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep every k-th row in the CSV (plus the first and last).
        #[arg(long, default_value_t = 1)]
        sample: u64,
    },
    /// Which sufficient conditions certify Robin's inequality for n > 5040.
    Classify {
        n: Option<String>,
        #[arg(long, conflicts_with = "n")]
        factored: Option<String>,
    },
    /// The 2-adic threshold and odd-part bound for an odd c.
    Threshold {
        /// Odd integer or factored form.
        c: String,
    },
    /// Exact checks of the constants used in the proofs.
    Constants,
}

/// Outcome of a command: the artifact and whether it reports a finding that
/// contradicts the expected result.
struct Done {
    artifact: Value,
    finding: bool,
}

fn parse_n(s: &str) -> Result<Factorization> {
    let t = s.trim();
    if t.chars().all(|c| c.is_ascii_digit()) && !t.is_empty() {
        let n: BigUint = t.parse().map_err(|_| Error::InvalidArgument(format!("bad integer {t:?}")))?;
        factorize(&n)
    } else {
        Factorization::parse(t)
    }
}

fn parse_eps(s: &str) -> Result<ExactRatio> {
    ExactRatio::parse(s)
}

fn scan_cfg(cfg: &RunConfig) -> ScanConfig {
    ScanConfig {
        cap: cfg.scan_cap,
        max_digits: cfg.precision,
        ..ScanConfig::default().with_threads(cfg.threads())
    }
}

fn io_err(path: &std::path::Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn cmd_factor(cfg: &RunConfig, n: &str) -> Result<Done> {
    let f = parse_n(n)?;
    let s = sigma_over_n(&f);
    let r = n_over_phi(&f);
    let d = cfg.precision.min(60);
    let nu: Vec<Value> = f.factors().iter().map(|&(p, a)| json!({"p": p.to_string(), "nu": a})).collect();
    let result = json!({
        "n": f.value().to_string(),
        "factorization": f,
        "omega": f.omega(),
        "nu": nu,
        "sigma_over_n": s,
        "sigma_over_n_decimal": s.to_interval(d),
        "n_over_phi": r,
        "n_over_phi_decimal": r.to_interval(d),
        "lemma1_product": lemma1_product(&f),
    });
    Ok(Done {
        artifact: envelope("factor", n, cfg, result),
        finding: false,
    })
}

fn cmd_robin_one(cfg: &RunConfig, n: &str) -> Result<Done> {
    let f = parse_n(n)?;
    let o = robin_check(&f, cfg.precision)?;
    let result = json!({
        "n": f.value().to_string(),
        "factorization": f,
        "verdict": o.verdict,
        "out_of_domain": o.out_of_domain,
        "sigma_ratio": o.sigma_ratio,
        "rhs": o.rhs,
        "margin": o.margin(),
        "digits_used": o.digits_used,
    });
    if o.verdict == Verdict::Undecided {
        return Err(Error::Precision {
            detail: format!("robin {n} undecided"),
            required_digits: cfg.precision * 2,
        });
    }
    Ok(Done {
        artifact: envelope("robin", n, cfg, result),
        finding: false,
    })
}

fn cmd_robin_range(cfg: &RunConfig, lo: u64, hi: u64, bound: Bound, out: Option<&PathBuf>) -> Result<Done> {
    let kind = match bound {
        Bound::Robin => ScanKind::Robin,
        Bound::Unconditional => ScanKind::Unconditional,
        Bound::OddPart => ScanKind::OddPart,
    };
    let r = scan(kind, lo, hi, &scan_cfg(cfg))?;
    if let Some(path) = out {
        let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
        writeln!(w, "n").and_then(|_| r.violators.iter().try_for_each(|v| writeln!(w, "{v}")))
            .and_then(|_| w.flush())
            .map_err(|e| io_err(path, e))?;
    }
    if !r.undecided.is_empty() {
        return Err(Error::Precision {
            detail: format!("{} values undecided, first {}", r.undecided.len(), r.undecided[0]),
            required_digits: cfg.precision * 2,
        });
    }
    // Above 5040 no violator is expected for any of the three bounds.
    let finding = r.violators.iter().any(|&v| v > 5040);
    let input = format!("{lo} {hi} {kind:?}");
    Ok(Done {
        artifact: envelope("robin --range", &input, cfg, &r),
        finding,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_beta_max(
    cfg: &RunConfig,
    epsilon: &str,
    resume: bool,
    overshoot: u64,
    segment_size: u64,
    checkpoint_every: u64,
    max_segments: Option<u64>,
) -> Result<Done> {
    let eps = parse_eps(epsilon)?;
    let ckpt = match &cfg.checkpoint_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            Some(dir.join(format!("beta-{}-{}.rbl", eps.numer(), eps.denom())))
        }
        None if resume => return Err(Error::InvalidArgument("--resume needs --checkpoint-dir".into())),
        None => None,
    };
    if segment_size < MIN_SEGMENT {
        return Err(Error::InvalidArgument(format!("segment size must be at least {MIN_SEGMENT}")));
    }
    let sieve = SieveConfig {
        segment_size,
        threads: cfg.threads(),
        checkpoint_path: ckpt,
        checkpoint_every,
    };
    let opts = BetaSearchOptions {
        overshoot_primes: overshoot,
        max_segments,
        resume,
    };
    let r = find_beta_max_with(&eps, &sieve, cfg.precision.min(100), &opts)?;
    for e in &r.checkpoint_errors {
        eprintln!("warning: {e}");
    }
    let finding = !r.reversals.is_empty();
    let input = format!("{eps} overshoot={overshoot} segment={segment_size}");
    let mut result = serde_json::to_value(&r).expect("serializes");
    // where the run started is not part of the answer
    if let Some(o) = result.as_object_mut() {
        if let Some(seg) = o.remove("resumed_from_segment") {
            if !seg.is_null() {
                eprintln!("resumed from segment {seg}");
            }
        }
    }
    Ok(Done {
        artifact: envelope("beta-max", &input, cfg, result),
        finding,
    })
}

fn cmd_exceptions(cfg: &RunConfig, epsilon: &str, out: &PathBuf, resume: Option<String>) -> Result<Done> {
    let eps = parse_eps(epsilon)?;
    let table = build_beta_table(&eps, cfg.precision.clamp(30, 100))?;
    let ecfg = EnumerationConfig {
        n_cap: cfg.enum_cap as u128,
        candidate_cap: cfg.candidate_cap,
        threads: cfg.threads(),
        max_digits: cfg.precision,
        resume: resume.clone(),
    };
    let file = if resume.is_some() {
        OpenOptions::new().append(true).open(out)
    } else {
        File::create(out)
    };
    let mut w = BufWriter::new(file.map_err(|e| io_err(out, e))?);
    if resume.is_none() {
        writeln!(w, "{CSV_HEADER}").map_err(|e| io_err(out, e))?;
    }
    let res = enumerate_exceptions_into(&table, &ecfg, &mut |r| {
        writeln!(w, "{}", csv_line(r)).map_err(Error::from)
    });
    w.flush().map_err(|e| io_err(out, e))?;
    let summary = res?;
    let input = format!("{eps} resume={}", resume.as_deref().unwrap_or("-"));
    let mut sidecar_path = out.clone().into_os_string();
    sidecar_path.push(".json");
    let sidecar_path = PathBuf::from(sidecar_path);
    let csv_bytes = std::fs::read(out).map_err(|e| io_err(out, e))?;
    let result = json!({
        "summary": summary,
        "csv": out.display().to_string(),
        "csv_sha256": output::sha256_hex(&csv_bytes),
    });
    let artifact = envelope("exceptions", &input, cfg, result);
    std::fs::write(&sidecar_path, serde_json::to_string_pretty(&artifact).expect("json") + "\n")
        .map_err(|e| io_err(&sidecar_path, e))?;
    Ok(Done { artifact, finding: false })
}

fn cmd_ca(cfg: &RunConfig, max_loglog: f64, gap: bool, gap_limit: u64, out: Option<&PathBuf>, sample: u64) -> Result<Done> {
    if !(max_loglog > 0.0) || max_loglog > cfg.loglog_cap {
        return Err(Error::Capacity {
            detail: format!("max log log n {max_loglog} outside (0, {}]", cfg.loglog_cap),
            resume: None,
        });
    }
    let sample = sample.max(1);
    let ccfg = CaConfig {
        digits: cfg.precision,
        threads: cfg.threads(),
        ..CaConfig::default()
    };
    let mut w = match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?);
            writeln!(w, "{CA_CSV_HEADER}").map_err(|e| io_err(p, e))?;
            Some(w)
        }
        None => None,
    };
    let mut last_line = None;
    let s = verify_robin_on_ca(max_loglog, &ccfg, &mut |r| {
        if let Some(w) = w.as_mut() {
            let line = r.csv_line();
            if r.index == 1 || r.index % sample == 0 {
                writeln!(w, "{line}")?;
                last_line = None;
            } else {
                last_line = Some(line);
            }
        }
        Ok(())
    })?;
    if let (Some(w), Some(p)) = (w.as_mut(), out) {
        if let Some(l) = last_line {
            writeln!(w, "{l}").map_err(|e| io_err(p, e))?;
        }
        w.flush().map_err(|e| io_err(p, e))?;
    }
    let mut finding = !s.fails_above_5040.is_empty();
    if !s.undecided.is_empty() {
        return Err(Error::Precision {
            detail: format!("CA elements undecided: {:?}", s.undecided),
            required_digits: cfg.precision * 2,
        });
    }
    let gaps = if gap {
        let g = gap_check_all(gap_limit.min(cfg.scan_cap), &scan_cfg(cfg))?;
        finding |= g.iter().any(|r| !r.violators_above_5040.is_empty());
        Some(g)
    } else {
        None
    };
    let input = format!("max_loglog={max_loglog} gap={gap} gap_limit={gap_limit} sample={sample}");
    Ok(Done {
        artifact: envelope("ca", &input, cfg, json!({"summary": s, "gaps": gaps})),
        finding,
    })
}

fn cmd_classify(cfg: &RunConfig, n: &str) -> Result<Done> {
    let f = parse_n(n)?;
    let v = classify(&f, cfg.precision)?;
    Ok(Done {
        artifact: envelope("classify", n, cfg, v),
        finding: false,
    })
}

fn cmd_threshold(cfg: &RunConfig, c: &str) -> Result<Done> {
    let f = parse_n(c)?;
    let t = nu2_threshold_factored(&f, cfg.precision)?;
    let b = odd_part_bound_check_factored(&f, cfg.precision)?;
    let finding = b.verdict == Verdict::Fails;
    Ok(Done {
        artifact: envelope("threshold", c, cfg, json!({"c": f, "nu2_threshold": t, "odd_part_bound": b})),
        finding,
    })
}

fn cmd_constants(cfg: &RunConfig) -> Result<Done> {
    let r = verify_proof_constants();
    let finding = !r.all_passed;
    Ok(Done {
        artifact: envelope("constants", "", cfg, r),
        finding,
    })
}

fn run(cli: Cli) -> Result<Done> {
    let cfg = &cli.cfg;
    cfg.validate()?;
    match cli.cmd {
        Cmd::Factor { n } => cmd_factor(cfg, &n),
        Cmd::Robin { n: Some(n), .. } => cmd_robin_one(cfg, &n),
        Cmd::Robin { range: Some(r), bound, violators_out, .. } => {
            cmd_robin_range(cfg, r[0], r[1], bound, violators_out.as_ref())
        }
        Cmd::Robin { .. } => Err(Error::InvalidArgument("give N or --range LO HI".into())),
        Cmd::BetaMax { epsilon, resume, overshoot, segment_size, checkpoint_every, max_segments } => {
            cmd_beta_max(cfg, &epsilon, resume, overshoot, segment_size, checkpoint_every, max_segments)
        }
        Cmd::Exceptions { epsilon, out, resume } => cmd_exceptions(cfg, &epsilon, &out, resume),
        Cmd::Ca { max_loglog, gap_check, gap_limit, out, sample } => {
            cmd_ca(cfg, max_loglog, gap_check, gap_limit, out.as_ref(), sample)
        }
        Cmd::Classify { n: Some(n), .. } | Cmd::Classify { factored: Some(n), .. } => cmd_classify(cfg, &n),
        Cmd::Classify { .. } => Err(Error::InvalidArgument("give N or --factored F".into())),
        Cmd::Threshold { c } => cmd_threshold(cfg, &c),
        Cmd::Constants => cmd_constants(cfg),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::Domain { .. } | Error::Checkpoint(_) | Error::Io(_) => 2,
        Error::Precision { .. } => 3,
        Error::Capacity { .. } => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.cfg.format;
    match run(cli) {
        Ok(done) => {
            emit(&done.artifact, format);
            ExitCode::from(if done.finding { 1 } else { 0 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Capacity { resume: Some(t), .. } = &e {
                eprintln!("resume point: {t}");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
