//! Data predicates used by `data` queries and layer filters.
//!
//! A predicate object is a conjunction of per-field terms; a list of
//! predicate objects is their disjunction. A term is a literal (equality), a
//! list of literals (membership), or an operator map that may nest `not`,
//! `and` and `or`.

use std::cmp::Ordering;
use std::fmt;

use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};

use crate::value::{compare, display, values_equal};
use crate::vis::{Datatype, Row};

pub const OPERATORS: &[&str] = &["not", "and", "or", "eq", "neq", "gt", "gte", "lt", "lte", "regex", "startsWith", "includes", "endsWith"];

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PredicateError {
    #[error("malformed predicate: {0}")]
    Malformed(String),
    #[error("type mismatch: operator \"{op}\" needs ordered data but field \"{field}\" is nominal")]
    TypeMismatch { op: String, field: String },
}

#[derive(Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DataPredicate(Value);

impl fmt::Debug for DataPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DataPredicate({})", self.0)
    }
}

impl<'de> Deserialize<'de> for DataPredicate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        DataPredicate::new(v).map_err(serde::de::Error::custom)
    }
}

impl DataPredicate {
    pub fn new(value: Value) -> Result<Self, PredicateError> {
        match &value {
            Value::Object(map) => check_object(map)?,
            Value::Array(items) => {
                for item in items {
                    match item {
                        Value::Object(map) => check_object(map)?,
                        other => return Err(PredicateError::Malformed(format!("disjunct must be an object, got {other}"))),
                    }
                }
            }
            other => return Err(PredicateError::Malformed(format!("expected an object or a list of objects, got {other}"))),
        }
        Ok(DataPredicate(value))
    }

    pub fn as_value(&self) -> &Value {
        &self.0
    }

    fn disjuncts(&self) -> Vec<&Map<String, Value>> {
        match &self.0 {
            Value::Object(m) => vec![m],
            Value::Array(items) => items.iter().filter_map(Value::as_object).collect(),
            _ => Vec::new(),
        }
    }

    /// Every field the predicate mentions.
    pub fn fields(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for d in self.disjuncts() {
            for k in d.keys() {
                if !out.contains(k) {
                    out.push(k.clone());
                }
            }
        }
        out
    }

    /// Number of per-field terms across all disjuncts.
    pub fn term_count(&self) -> usize {
        self.disjuncts().iter().map(|d| d.len()).sum()
    }

    /// Evaluates against a row. A term over a field the row lacks is false.
    pub fn eval(&self, row: &Row, datatype: &dyn Fn(&str) -> Option<Datatype>) -> Result<bool, PredicateError> {
        for d in self.disjuncts() {
            let mut all = true;
            for (field, matcher) in d {
                let ok = match row.get(field) {
                    Some(v) => eval_term(v, matcher, field, datatype(field))?,
                    None => false,
                };
                if !ok {
                    all = false;
                    break;
                }
            }
            if all {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Evaluates `data` against every row of a schema-typed table.
pub fn eval_data_predicate(pred: &DataPredicate, row: &Row, schema: &[crate::vis::FieldDef]) -> Result<bool, PredicateError> {
    pred.eval(row, &|f| schema.iter().find(|d| d.field == f).map(|d| d.datatype))
}

fn check_object(map: &Map<String, Value>) -> Result<(), PredicateError> {
    for matcher in map.values() {
        check_matcher(matcher)?;
    }
    Ok(())
}

fn is_operator_map(map: &Map<String, Value>) -> bool {
    !map.is_empty() && map.keys().all(|k| OPERATORS.contains(&k.as_str()))
}

fn check_matcher(matcher: &Value) -> Result<(), PredicateError> {
    match matcher {
        Value::Array(items) => items.iter().try_for_each(check_matcher),
        Value::Object(map) if is_operator_map(map) => {
            for (op, arg) in map {
                match op.as_str() {
                    "and" | "or" => match arg {
                        Value::Array(items) => items.iter().try_for_each(check_matcher)?,
                        _ => return Err(PredicateError::Malformed(format!("\"{op}\" takes a list"))),
                    },
                    "not" => check_matcher(arg)?,
                    "regex" => {
                        let pat = arg.as_str().ok_or_else(|| PredicateError::Malformed("\"regex\" takes a string".into()))?;
                        Regex::new(pat).map_err(|e| PredicateError::Malformed(e.to_string()))?;
                    }
                    "startsWith" | "endsWith" | "includes" if (arg.is_object() || arg.is_array()) => {
                        return Err(PredicateError::Malformed(format!("\"{op}\" takes a scalar")));
                    }
                    _ => {}
                }
            }
            Ok(())
        }
        Value::Object(map) => {
            let unknown: Vec<&String> = map.keys().filter(|k| !OPERATORS.contains(&k.as_str())).collect();
            if map.keys().any(|k| OPERATORS.contains(&k.as_str())) {
                Err(PredicateError::Malformed(format!("unknown operator(s) {unknown:?}")))
            } else {
                Ok(())
            }
        }
        _ => Ok(()),
    }
}

/// Evaluates one term for a single value.
pub fn eval_term(value: &Value, matcher: &Value, field: &str, datatype: Option<Datatype>) -> Result<bool, PredicateError> {
    match matcher {
        Value::Array(items) => {
            for m in items {
                if eval_term(value, m, field, datatype)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Value::Object(map) if is_operator_map(map) => {
            for (op, arg) in map {
                if !eval_op(value, op, arg, field, datatype)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        other => Ok(values_equal(value, other)),
    }
}

fn eval_op(value: &Value, op: &str, arg: &Value, field: &str, datatype: Option<Datatype>) -> Result<bool, PredicateError> {
    let ordered = |want: &[Ordering]| -> Result<bool, PredicateError> {
        if datatype == Some(Datatype::Nominal) {
            return Err(PredicateError::TypeMismatch { op: op.to_string(), field: field.to_string() });
        }
        if value.is_null() {
            return Ok(false);
        }
        Ok(compare(value, arg).is_some_and(|o| want.contains(&o)))
    };
    match op {
        "not" => Ok(!eval_term(value, arg, field, datatype)?),
        "and" => {
            for m in arg.as_array().into_iter().flatten() {
                if !eval_term(value, m, field, datatype)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        "or" => {
            for m in arg.as_array().into_iter().flatten() {
                if eval_term(value, m, field, datatype)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        "eq" => Ok(values_equal(value, arg)),
        "neq" => Ok(!values_equal(value, arg)),
        "gt" => ordered(&[Ordering::Greater]),
        "gte" => ordered(&[Ordering::Greater, Ordering::Equal]),
        "lt" => ordered(&[Ordering::Less]),
        "lte" => ordered(&[Ordering::Less, Ordering::Equal]),
        "regex" => {
            let re = Regex::new(arg.as_str().unwrap_or_default()).map_err(|e| PredicateError::Malformed(e.to_string()))?;
            Ok(!value.is_null() && re.is_match(&display(value)))
        }
        "startsWith" => Ok(!value.is_null() && display(value).starts_with(&display(arg))),
        "endsWith" => Ok(!value.is_null() && display(value).ends_with(&display(arg))),
        "includes" => Ok(match value {
            Value::Array(items) => items.iter().any(|v| values_equal(v, arg)),
            Value::Null => false,
            v => display(v).contains(&display(arg)),
        }),
        other => Err(PredicateError::Malformed(format!("unknown operator \"{other}\""))),
    }
}

/// Matches an element attribute against a specifier attribute value.
/// Objects that are not operator maps match as subsets.
pub fn match_attribute(actual: Option<&Value>, matcher: &Value) -> Result<bool, PredicateError> {
    let Some(actual) = actual else { return Ok(false) };
    match (actual, matcher) {
        (Value::Object(have), Value::Object(want)) if !is_operator_map(want) => {
            for (k, m) in want {
                if !match_attribute(have.get(k), m)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        (Value::Array(_), Value::Array(_)) => Ok(values_equal(actual, matcher)),
        _ => eval_term(actual, matcher, "", None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vis::FieldDef;
    use serde_json::json;

    fn row(v: Value) -> Row {
        serde_json::from_value(v).unwrap()
    }

    fn schema() -> Vec<FieldDef> {
        serde_json::from_value(json!([
            {"field": "price", "type": "quantitative"},
            {"field": "year", "type": "quantitative"},
            {"field": "forecasted_year", "type": "quantitative"},
            {"field": "name", "type": "nominal"}
        ]))
        .unwrap()
    }

    fn eval(p: Value, r: Value) -> Result<bool, PredicateError> {
        eval_data_predicate(&DataPredicate::new(p).unwrap(), &row(r), &schema())
    }

    #[test]
    fn literal_equality() {
        assert!(eval(json!({"price": 30}), json!({"price": 30, "name": "x"})).unwrap());
        assert!(!eval(json!({"price": 30}), json!({"price": 31})).unwrap());
    }

    #[test]
    fn list_is_disjunction() {
        let p = json!([{"year": {"lte": 2011}}, {"forecasted_year": {"lte": 2011}}]);
        assert!(eval(p.clone(), json!({"year": 2013, "forecasted_year": 2010})).unwrap());
        assert!(!eval(p, json!({"year": 2013, "forecasted_year": null})).unwrap());
    }

    #[test]
    fn string_operators() {
        assert!(!eval(json!({"name": {"startsWith": "Forecast"}}), json!({"name": "Actual"})).unwrap());
        assert!(eval(json!({"name": {"endsWith": "ual"}}), json!({"name": "Actual"})).unwrap());
        assert!(eval(json!({"name": {"includes": "ctu"}}), json!({"name": "Actual"})).unwrap());
        assert!(eval(json!({"name": {"regex": "^A.*l$"}}), json!({"name": "Actual"})).unwrap());
    }

    #[test]
    fn logical_operators_nest() {
        let p = json!({"price": {"or": [{"lt": 10}, {"and": [{"gt": 50}, {"not": 60}]}]}});
        assert!(eval(p.clone(), json!({"price": 5})).unwrap());
        assert!(eval(p.clone(), json!({"price": 55})).unwrap());
        assert!(!eval(p.clone(), json!({"price": 60})).unwrap());
        assert!(!eval(p, json!({"price": 30})).unwrap());
    }

    #[test]
    fn membership_and_conjunction() {
        assert!(eval(json!({"name": ["a", "b"], "price": {"gte": 3}}), json!({"name": "b", "price": 3})).unwrap());
        assert!(!eval(json!({"name": ["a", "b"], "price": {"gte": 3}}), json!({"name": "c", "price": 3})).unwrap());
    }

    #[test]
    fn arithmetic_on_nominal_is_rejected() {
        assert!(matches!(eval(json!({"name": {"gt": "a"}}), json!({"name": "b"})), Err(PredicateError::TypeMismatch { .. })));
    }

    #[test]
    fn malformed_predicates() {
        assert!(DataPredicate::new(json!(3)).is_err());
        assert!(DataPredicate::new(json!({"a": {"gt": 1, "bogus": 2}})).is_err());
        assert!(DataPredicate::new(json!({"a": {"regex": "("}})).is_err());
        assert_eq!(DataPredicate::new(json!([{"a": 1}, {"b": 2, "c": 3}])).unwrap().term_count(), 3);
    }

    #[test]
    fn attribute_subset_matching() {
        let scale = json!({"type": "linear", "domain": [0, 10]});
        assert!(match_attribute(Some(&scale), &json!({"type": "linear"})).unwrap());
        assert!(!match_attribute(Some(&scale), &json!({"type": "band"})).unwrap());
        assert!(match_attribute(Some(&json!(14)), &json!({"gte": 12})).unwrap());
        assert!(!match_attribute(None, &json!("red")).unwrap());
    }
}
