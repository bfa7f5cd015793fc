//! JSON report envelope. Every number in a payload is wrapped with its
//! provenance; floats also carry the number of significant digits emitted.

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use ellembed::exact_numbers::render;
use ellembed::Rational;

/// Significant digits kept for floats in JSON output.
pub const FLOAT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    /// A closed formula or recursion evaluated exactly.
    PaperFormula,
    /// An independent capacity oracle (ECH or Ekeland–Hofer sequences).
    Oracle,
    /// A floating-point computation.
    Numerical,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportEnvelope {
    pub command: Vec<String>,
    pub config_hash: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub results: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ReportEnvelope {
    pub fn new(command: Vec<String>, canonical_config: &str, pass: bool, results: Value) -> Self {
        ReportEnvelope { command, config_hash: config_hash(canonical_config), pass, results: Some(results), error: None }
    }

    pub fn failure(command: Vec<String>, canonical_config: &str, error: String) -> Self {
        ReportEnvelope { command, config_hash: config_hash(canonical_config), pass: false, results: None, error: Some(error) }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("envelope serializes")
    }
}

pub fn config_hash(canonical: &str) -> String {
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

fn round_significant(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", FLOAT_DIGITS - 1, x).parse().unwrap_or(x)
}

pub fn exact(r: &Rational, p: Provenance) -> Value {
    json!({ "value": render(r), "provenance": p })
}

pub fn float(x: f64, p: Provenance) -> Value {
    if x.is_finite() {
        json!({ "value": round_significant(x), "precision": FLOAT_DIGITS, "provenance": p })
    } else {
        json!({ "value": x.to_string(), "precision": FLOAT_DIGITS, "provenance": p })
    }
}

pub fn integer(n: impl Into<Value>, p: Provenance) -> Value {
    json!({ "value": n.into(), "provenance": p })
}

fn is_tagged(m: &Map<String, Value>) -> bool {
    m.contains_key("provenance") && m.contains_key("value")
}

/// Wraps every untagged number inside `v` with provenance `p`.
pub fn tag_numbers(v: Value, p: Provenance) -> Value {
    match v {
        Value::Number(n) => match n.as_i64().map(Value::from).or_else(|| n.as_u64().map(Value::from)) {
            Some(int) => integer(int, p),
            None => float(n.as_f64().unwrap_or(f64::NAN), p),
        },
        Value::Array(items) => Value::Array(items.into_iter().map(|x| tag_numbers(x, p)).collect()),
        Value::Object(m) if is_tagged(&m) => Value::Object(m),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, x)| (k, tag_numbers(x, p))).collect()),
        other => other,
    }
}

/// Serializes `x` and tags every number in it.
pub fn tagged<T: Serialize>(x: &T, p: Provenance) -> Value {
    tag_numbers(serde_json::to_value(x).expect("report serializes"), p)
}
