//! Deterministic text output: every float is written with 17 significant
//! digits so files round-trip bit for bit.

use serde::Serialize;
use serde_json::Value;
use std::fmt::Write;

/// `{:.16e}`; non-finite values become `null` in JSON and `NaN`/`inf` in CSV.
pub fn float17(x: f64) -> String {
    format!("{x:.16e}")
}

fn json_number(n: &serde_json::Number) -> String {
    if n.is_f64() {
        let x = n.as_f64().expect("f64 number");
        if x.is_finite() {
            float17(x)
        } else {
            "null".into()
        }
    } else {
        n.to_string()
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |k: usize| "  ".repeat(k);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => out.push_str(&json_number(n)),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string escapes")),
        Value::Array(items) if items.iter().all(is_scalar) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_value(out, item, indent);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, item, indent + 1);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            let _ = write!(out, "{}]", pad(indent));
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (k, (key, item)) in map.iter().enumerate() {
                let _ = write!(out, "{}{}: ", pad(indent + 1), serde_json::to_string(key).expect("key"));
                write_value(out, item, indent + 1);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            let _ = write!(out, "{}}}", pad(indent));
        }
    }
}

/// Pretty JSON with 17-digit floats and a trailing newline; keys are sorted.
pub fn json_string<T: Serialize>(value: &T) -> crate::error::Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::f64::consts::PI] {
            let s = float17(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(float17(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn json_layout() {
        let v = json!({"b": 0.5, "a": [1, 2], "rows": [[0, 1, -1.0]], "name": "x\"y", "nan": f64::NAN});
        let s = json_string(&v).unwrap();
        assert!(s.contains("\"b\": 5.0000000000000000e-1"));
        assert!(s.contains("\"a\": [1, 2]"));
        assert!(s.contains("[0, 1, -1.0000000000000000e0]"));
        assert!(s.contains("\"x\\\"y\""));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"], json!(0.5));
    }
}
