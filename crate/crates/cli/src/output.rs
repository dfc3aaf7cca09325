use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Result wrapped with the tool version, the config and a digest of the
/// inputs that determine it.
pub fn envelope(command: &str, input: &str, cfg: &RunConfig, result: impl Serialize) -> Value {
    json!({
        "tool": "robin",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "input": input,
        "input_digest": sha256_hex(format!("{command}\n{input}").as_bytes()),
        "config": cfg.echo(),
        "result": serde_json::to_value(result).expect("result serializes"),
    })
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

/// Interval objects print as one value.
fn as_interval(v: &Value) -> Option<String> {
    let o = v.as_object()?;
    if o.len() == 3 && o.contains_key("lo") && o.contains_key("hi") && o.contains_key("mid") {
        Some(format!("{} [{}, {}]", scalar(&o["mid"]), scalar(&o["lo"]), scalar(&o["hi"])))
    } else {
        None
    }
}

fn human(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                if let Some(s) = as_interval(x) {
                    out.push_str(&format!("{pad}{k}: {s}\n"));
                } else if x.is_object() || (x.is_array() && x.as_array().unwrap().iter().any(|e| e.is_object())) {
                    out.push_str(&format!("{pad}{k}:\n"));
                    human(x, indent + 1, out);
                } else if let Value::Array(a) = x {
                    let items: Vec<String> = a.iter().map(|e| match e {
                        Value::Array(t) => format!("({})", t.iter().map(scalar).collect::<Vec<_>>().join(", ")),
                        e => scalar(e),
                    }).collect();
                    out.push_str(&format!("{pad}{k}: [{}]\n", items.join(", ")));
                } else {
                    out.push_str(&format!("{pad}{k}: {}\n", scalar(x)));
                }
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                out.push_str(&format!("{pad}- [{i}]\n"));
                human(x, indent + 1, out);
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other))),
    }
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                flatten(&key(k), x, rows);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&key(&i.to_string()), x, rows);
            }
        }
        other => rows.push((prefix.to_string(), scalar(other))),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Render an artifact. Human and CSV output are views of the JSON value.
pub fn render(v: &Value, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(v).expect("json") + "\n",
        Format::Human => {
            let mut out = String::new();
            human(&v["result"], 0, &mut out);
            out
        }
        Format::Csv => {
            let mut rows = Vec::new();
            flatten("", v, &mut rows);
            let mut out = String::from("key,value\n");
            for (k, x) in rows {
                out.push_str(&format!("{},{}\n", csv_field(&k), csv_field(&x)));
            }
            out
        }
    }
}

pub fn emit(v: &Value, format: Format) {
    let mut so = std::io::stdout().lock();
    let _ = so.write_all(render(v, format).as_bytes());
}
