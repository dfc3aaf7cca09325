//! Browser bindings. Every export takes strings and returns a JSON string so
//! the page needs no glue beyond `JSON.parse`.

use serde_json::json;
use wasm_bindgen::prelude::*;

use robin_core::arith::{factorize, robin_check, sigma_over_n, ExactRatio, Factorization};
use robin_core::families::{classify, verify_proof_constants};
use robin_core::primes::{find_beta_max_with, BetaSearchOptions, SieveConfig};

const DIGITS: u32 = 60;

fn parse_n(s: &str) -> robin_core::Result<Factorization> {
    let t = s.trim();
    if !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit()) {
        let n = t
            .parse()
            .map_err(|_| robin_core::Error::InvalidArgument(format!("bad integer {t:?}")))?;
        factorize(&n)
    } else {
        Factorization::parse(t)
    }
}

fn js(e: robin_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Factorization, sigma(n)/n, Robin's inequality and the family classification.
pub fn analyse(n: &str) -> robin_core::Result<String> {
    let f = parse_n(n)?;
    let robin = robin_check(&f, DIGITS)?;
    let family = if f.value() > 5040u32.into() { Some(classify(&f, DIGITS)?) } else { None };
    Ok(json!({
        "n": f.value().to_string(),
        "factorization": f,
        "sigma_over_n": sigma_over_n(&f),
        "robin": {
            "verdict": robin.verdict,
            "out_of_domain": robin.out_of_domain,
            "sigma_ratio": robin.sigma_ratio,
            "rhs": robin.rhs,
            "margin": robin.margin(),
        },
        "family": family,
    })
    .to_string())
}

/// beta_max for an epsilon no smaller than 1/20000; smaller values take too
/// long on one browser thread.
pub fn beta(epsilon: &str) -> robin_core::Result<String> {
    let eps = ExactRatio::parse(epsilon)?;
    if eps.to_f64() < 1.0 / 20000.0 {
        return Err(robin_core::Error::Capacity {
            detail: "the demo stops at epsilon = 1/20000".into(),
            resume: None,
        });
    }
    let cfg = SieveConfig {
        threads: 1,
        ..SieveConfig::default()
    };
    let opts = BetaSearchOptions {
        overshoot_primes: 1 << 14,
        ..BetaSearchOptions::default()
    };
    let r = find_beta_max_with(&eps, &cfg, DIGITS, &opts)?;
    Ok(serde_json::to_string(&r).expect("serializes"))
}

pub fn constants() -> String {
    serde_json::to_string(&verify_proof_constants()).expect("serializes")
}

#[wasm_bindgen(js_name = analyse)]
pub fn analyse_js(n: &str) -> Result<String, JsError> {
    analyse(n).map_err(js)
}

#[wasm_bindgen(js_name = betaMax)]
pub fn beta_js(epsilon: &str) -> Result<String, JsError> {
    beta(epsilon).map_err(js)
}

#[wasm_bindgen(js_name = constants)]
pub fn constants_js() -> String {
    constants()
}
