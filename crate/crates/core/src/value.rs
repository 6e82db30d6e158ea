//! Helpers for comparing and normalizing loosely typed JSON values.

use std::cmp::Ordering;

use serde_json::{Number, Value};

/// Reads a value as a number. Strings of the form `"350px"` or `"350"` are
/// accepted and the unit is stripped.
pub fn as_number(value: &Value) -> Option<f64> {
    match value {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => {
            let s = s.trim();
            let s = s.strip_suffix("px").unwrap_or(s).trim_end();
            if s.is_empty() {
                return None;
            }
            s.parse::<f64>().ok().filter(|f| f.is_finite())
        }
        _ => None,
    }
}

/// Builds a JSON number, using the integer form when the value is integral.
pub fn number(f: f64) -> Value {
    if f.fract() == 0.0 && f.abs() < 1e15 {
        Value::Number(Number::from(f as i64))
    } else {
        Number::from_f64(f).map(Value::Number).unwrap_or(Value::Null)
    }
}

/// Equality that treats `3`, `3.0` and `"3px"` alike when either side is a
/// JSON number.
pub fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(_), _) | (_, Value::Number(_)) => match (as_number(a), as_number(b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        },
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| values_equal(p, q)),
        (Value::Object(x), Value::Object(y)) => x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| values_equal(v, w))),
        _ => a == b,
    }
}

/// Orders two values: numbers numerically, strings lexicographically (after
/// trimming, which is how temporal ISO-8601 strings are normalized).
pub fn compare(a: &Value, b: &Value) -> Option<Ordering> {
    match (a, b) {
        (Value::String(x), Value::String(y)) => {
            if let (Some(p), Some(q)) = (as_number(a), as_number(b)) {
                return p.partial_cmp(&q);
            }
            Some(x.trim().cmp(y.trim()))
        }
        _ => as_number(a)?.partial_cmp(&as_number(b)?),
    }
}

/// Rewrites every integral float in place so that `12.0` serializes as `12`.
pub fn canonicalize_numbers(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if !n.is_i64() && !n.is_u64() {
                    *value = number(if f == 0.0 { 0.0 } else { f });
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(canonicalize_numbers),
        Value::Object(map) => map.values_mut().for_each(canonicalize_numbers),
        _ => {}
    }
}

/// Text shown for a value on a label.
pub fn display(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        Value::Number(_) => {
            let mut v = value.clone();
            canonicalize_numbers(&mut v);
            v.to_string()
        }
        other => other.to_string(),
    }
}

/// Stable string form of a value used inside element paths.
pub fn key_string(value: &Value) -> String {
    let mut v = value.clone();
    canonicalize_numbers(&mut v);
    v.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn px_strings_are_numbers() {
        assert_eq!(as_number(&json!("350px")), Some(350.0));
        assert_eq!(as_number(&json!("350 px")), Some(350.0));
        assert_eq!(as_number(&json!("12.5")), Some(12.5));
        assert_eq!(as_number(&json!("wide")), None);
        assert_eq!(as_number(&json!("px")), None);
    }

    #[test]
    fn integral_floats_collapse() {
        let mut v = json!({"a": 12.0, "b": [10.4, -0.0], "c": 3});
        canonicalize_numbers(&mut v);
        assert_eq!(v.to_string(), r#"{"a":12,"b":[10.4,0],"c":3}"#);
    }

    #[test]
    fn numeric_equality_ignores_representation() {
        assert!(values_equal(&json!(3), &json!(3.0)));
        assert!(values_equal(&json!([1, "a"]), &json!([1.0, "a"])));
        assert!(!values_equal(&json!("3"), &json!("3.0")));
        assert_eq!(compare(&json!(2011), &json!(2013)), Some(Ordering::Less));
        assert_eq!(compare(&json!("2020-01-02"), &json!("2020-01-10")), Some(Ordering::Less));
        assert_eq!(compare(&json!(true), &json!(1)), None);
    }
}
