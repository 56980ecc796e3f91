//! Deterministic rendering of command results as indented text or JSON.
//!
//! Objects are `serde_json` maps, whose keys are kept sorted, and every
//! rational is a string, so identical inputs give identical bytes.

use lagfloer::{Energy, GradedSpace, NVec, QVec, Rational};
use serde_json::{json, Map, Value};

use crate::document::term_records;

/// A rational as its `"p/q"` string.
pub fn q(r: &Rational) -> Value {
    Value::String(r.to_string())
}

pub fn energy(e: &Energy) -> Value {
    json!({ "lambda": q(&e.lambda), "mu": e.mu })
}

/// A vector as a list of `{label, lambda, mu, coeff}` terms.
pub fn nvec(v: &NVec, space: &GradedSpace) -> Value {
    serde_json::to_value(term_records(v, space)).expect("terms serialize")
}

/// A rational vector as a list of `{label, coeff}` pairs.
pub fn qvec(v: &QVec, space: &GradedSpace) -> Value {
    Value::Array(
        v.iter()
            .map(|(i, c)| json!({ "label": space.label(*i), "coeff": q(c) }))
            .collect(),
    )
}

/// Builds a map from key/value pairs.
pub fn obj<I: IntoIterator<Item = (&'static str, Value)>>(items: I) -> Value {
    let mut m = Map::new();
    for (k, v) in items {
        m.insert(k.to_string(), v);
    }
    Value::Object(m)
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("none".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(a) if a.is_empty() => Some("[]".into()),
        Value::Array(a) if a.iter().all(|x| !x.is_array() && !x.is_object()) => {
            Some(format!("[{}]", a.iter().filter_map(scalar).collect::<Vec<_>>().join(", ")))
        }
        Value::Object(m) if m.is_empty() => Some("{}".into()),
        _ => None,
    }
}

fn render_into(v: &Value, indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    match v {
        Value::Object(m) => {
            for (k, child) in m {
                match scalar(child) {
                    Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render_into(child, indent + 2, out);
                    }
                }
            }
        }
        Value::Array(a) => {
            for (i, child) in a.iter().enumerate() {
                match scalar(child) {
                    Some(s) => out.push_str(&format!("{pad}[{i}] {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}[{i}]\n"));
                        render_into(child, indent + 2, out);
                    }
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other).unwrap_or_default())),
    }
}

/// Indented `key: value` text.
pub fn render_human(v: &Value) -> String {
    let mut out = String::new();
    render_into(v, 0, &mut out);
    out
}

/// Pretty JSON with a trailing newline.
pub fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}
