//! Byte-stable JSON output: sorted keys, two-space indentation and integral
//! numbers written without a fractional part.

use serde_json::Value;

use super::VisSpec;
use crate::value::canonicalize_numbers;

pub fn to_canonical_value(spec: &VisSpec) -> Value {
    let mut v = serde_json::to_value(spec).expect("a spec always serializes");
    canonicalize_numbers(&mut v);
    v
}

/// Canonical text of a spec, ending in a newline.
pub fn canonical_serialize(spec: &VisSpec) -> String {
    let mut s = serde_json::to_string_pretty(&to_canonical_value(spec)).expect("a value always serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vis::parse_vis_spec;

    #[test]
    fn key_order_does_not_matter() {
        let a = r#"{"width": 10.0, "height": 20, "data": {"schema": [{"field": "f", "type": "nominal"}], "rows": [{"f": "x"}]}}"#;
        let b = r#"{"data": {"rows": [{"f": "x"}], "schema": [{"type": "nominal", "field": "f"}]}, "height": 20.0, "width": 10}"#;
        let sa = canonical_serialize(&parse_vis_spec(a).unwrap());
        assert_eq!(sa, canonical_serialize(&parse_vis_spec(b).unwrap()));
        assert!(sa.contains("\"width\": 10\n") && !sa.contains("10.0"));
        assert_eq!(sa, canonical_serialize(&parse_vis_spec(&sa).unwrap()));
    }
}
