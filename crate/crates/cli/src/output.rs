use pdfa_core::linalg::{DenseMatrix, ProbVector};
use serde_json::{json, Map, Value};

pub const SCHEMA: &str = "pdfa/1";

/// Significant digits kept for every float in JSON output.
pub const FLOAT_DIGITS: usize = 12;

pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { 0.0 } else { v };
    }
    let r: f64 = format!("{:.*e}", FLOAT_DIGITS - 1, v).parse().expect("formatted float");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Rounds every float to [`FLOAT_DIGITS`] significant digits. Object keys
/// come out sorted because `serde_json::Map` is ordered.
pub fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64 number"));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(normalize).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

/// Adds the schema tag and renders the document.
pub fn render(mut doc: Map<String, Value>) -> String {
    doc.insert("schema".into(), json!(SCHEMA));
    let mut s = serde_json::to_string_pretty(&normalize(Value::Object(doc))).expect("serialisable");
    s.push('\n');
    s
}

/// A matrix as `{rows, cols, entries}` with entries in row-major order.
pub fn matrix(m: &DenseMatrix) -> Value {
    serde_json::to_value(m).expect("serialisable")
}

pub fn vector(v: &ProbVector) -> Value {
    json!(v.values())
}

pub fn fmt_matrix(m: &DenseMatrix, decimals: usize) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let cells: Vec<String> = m.row(i).iter().map(|v| format!("{v:.decimals$}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}
