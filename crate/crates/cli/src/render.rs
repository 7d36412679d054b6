//! Plain-text rendering of the JSON outputs. Every field of the JSON value
//! appears in the text.

use std::fmt::Write;

use serde_json::{Map, Value};

const LEADING: &[&str] = &["command", "analysis", "semantics", "goal", "result", "status", "verified"];

pub fn human(v: &Value) -> String {
    let mut out = String::new();
    match v {
        Value::Object(m) => object(m, 0, &mut out),
        other => {
            let _ = writeln!(out, "{}", scalar(other));
        }
    }
    out
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "none".to_string(),
        other => other.to_string(),
    }
}

fn ordered(m: &Map<String, Value>) -> Vec<(&String, &Value)> {
    let mut keys: Vec<(&String, &Value)> = m.iter().collect();
    keys.sort_by_key(|(k, _)| (LEADING.iter().position(|l| l == k).unwrap_or(LEADING.len()), k.as_str()));
    keys
}

fn object(m: &Map<String, Value>, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    for (k, v) in ordered(m) {
        match v {
            Value::Object(inner) if k == "trace" => trace(inner, depth, out),
            Value::Object(inner) => {
                let _ = writeln!(out, "{pad}{k}:");
                object(inner, depth + 1, out);
            }
            Value::String(s) if s.contains('\n') => {
                let _ = writeln!(out, "{pad}{k}:");
                for line in s.lines() {
                    let _ = writeln!(out, "{pad}  {line}");
                }
            }
            Value::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => {
                let joined: Vec<String> = items.iter().map(scalar).collect();
                let _ = writeln!(out, "{pad}{k}: [{}]", joined.join(", "));
            }
            Value::Array(items) => {
                let _ = writeln!(out, "{pad}{k}:");
                for item in items {
                    let _ = writeln!(out, "{pad}  -");
                    match item {
                        Value::Object(inner) => object(inner, depth + 2, out),
                        other => {
                            let _ = writeln!(out, "{pad}    {other}");
                        }
                    }
                }
            }
            other => {
                let _ = writeln!(out, "{pad}{k}: {}", scalar(other));
            }
        }
    }
}

/// One line per step: label, substitution, then the resulting configuration.
fn trace(m: &Map<String, Value>, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    let _ = writeln!(
        out,
        "{pad}trace ({} from {}):",
        m.get("semantics").map(scalar).unwrap_or_default(),
        m.get("goal").map(scalar).unwrap_or_default()
    );
    let steps = m.get("steps").and_then(Value::as_array).cloned().unwrap_or_default();
    for (i, s) in steps.iter().enumerate() {
        let field = |k: &str| s.get(k).cloned().unwrap_or(Value::Null);
        let list = |k: &str| -> String {
            match field(k) {
                Value::Array(items) => items.iter().map(scalar).collect::<Vec<_>>().join(","),
                Value::Object(map) => map.iter().map(|(a, b)| format!("{a}↦{}", scalar(b))).collect::<Vec<_>>().join(","),
                other => scalar(&other),
            }
        };
        let mut label = scalar(&field("kind"));
        if let Some(r) = s.get("rule").and_then(Value::as_str) {
            let _ = write!(label, " {r} on [{}]", list("matched_ids"));
            let _ = write!(label, " kept [{}] removed [{}]", list("kept"), list("removed"));
        }
        if let Some(g) = s.get("goal_index").and_then(Value::as_u64) {
            let _ = write!(label, " [{g}]");
        }
        let _ = writeln!(
            out,
            "{pad}  {}. {label} θ{{{}}} fresh{{{}}} → goal [{}] store {{{}}} builtin {}",
            i + 1,
            list("theta"),
            list("introduced"),
            list("goal_after"),
            list("store_after"),
            scalar(&field("builtin_after"))
        );
    }
}
