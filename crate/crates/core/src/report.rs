//! Byte-stable report emission: JSON with sorted keys and every float
//! printed as `{:.16e}`, and CSV for histograms.

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// Output format of an emitted report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

pub fn to_stable_json<T: Serialize>(report: &T) -> Result<String> {
    let v = serde_json::to_value(report).map_err(|e| Error::Serialize(e.to_string()))?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.extend(std::iter::repeat("  ").take(d));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, item, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(out, &map[*k], depth + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
    }
}

/// Seventeen significant digits in exponent form; JSON has no non-finite
/// numbers, so those become `null`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[derive(Serialize, serde::Deserialize, PartialEq, Debug)]
    struct R {
        zeta: f64,
        alpha: Vec<f64>,
        n: u64,
        name: String,
        m: HashMap<String, i32>,
    }

    fn sample() -> R {
        let mut m = HashMap::new();
        for (i, k) in ["q", "b", "x", "a"].iter().enumerate() {
            m.insert(k.to_string(), i as i32);
        }
        R {
            zeta: 0.1,
            alpha: vec![1.0, -2.5e-300, std::f64::consts::PI],
            n: 7,
            name: "a\"b".into(),
            m,
        }
    }

    #[test]
    fn keys_sorted_and_round_trip() {
        let s = to_stable_json(&sample()).unwrap();
        let pos = |k: &str| s.find(&format!("\"{k}\"")).unwrap();
        assert!(pos("alpha") < pos("m") && pos("m") < pos("n") && pos("n") < pos("name") && pos("name") < pos("zeta"));
        assert!(pos("a") < pos("b") && pos("b") < pos("q") && pos("q") < pos("x"));
        let back: R = serde_json::from_str(&s).unwrap();
        assert_eq!(back, sample());
    }

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
        assert_eq!(format_float(f64::NAN), "null");
        for x in [0.1, 1.0 / 3.0, 6.02e23, -1e-310] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn emission_is_byte_stable() {
        // HashMap iteration order differs between instances.
        let a = to_stable_json(&sample()).unwrap();
        let b = to_stable_json(&sample()).unwrap();
        assert_eq!(a, b);
    }
}
