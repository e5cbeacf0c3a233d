//! Report rendering: JSON (full run) and CSV (one row per run), with every
//! float rounded to six significant digits so output bytes are stable.

use serde::Serialize;
use serde_json::Value;

/// Rounds `v` to six significant digits.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.5e}").parse().unwrap_or(v)
}

/// Six-significant-digit rendering for CSV cells.
pub fn fmt_sig(v: f64) -> String {
    let r = round_sig(v);
    if r == 0.0 {
        return "0".to_owned();
    }
    let mag = r.abs();
    if r.is_finite() && (1e-4..1e15).contains(&mag) {
        r.to_string()
    } else {
        format!("{r:e}")
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n
                .as_f64()
                .map(round_sig)
                .and_then(serde_json::Number::from_f64)
            {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON in declaration field order with rounded floats.
pub fn to_stable_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}
