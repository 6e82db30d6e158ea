//! Structural diff of two charts, keyed by element path.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::value::values_equal;
use crate::vis::{enumerate_elements, Element, VisSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Change {
    pub path: String,
    pub attribute: String,
    pub before: Value,
    pub after: Value,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct DiffReport {
    pub added: Vec<String>,
    pub removed: Vec<String>,
    pub changed: Vec<Change>,
}

impl DiffReport {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.changed.is_empty()
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("plain data")
    }
}

fn by_path(spec: &VisSpec) -> BTreeMap<String, Element> {
    enumerate_elements(spec).into_iter().map(|e| (e.path.clone(), e)).collect()
}

fn same(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| same(p, q)),
        (Value::Object(x), Value::Object(y)) => x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| same(v, w))),
        _ => values_equal(a, b),
    }
}

/// Elements only in `b` are added, only in `a` removed; shared elements
/// report every property whose value differs.
pub fn diff(a: &VisSpec, b: &VisSpec) -> DiffReport {
    let (ea, eb) = (by_path(a), by_path(b));
    let mut report = DiffReport::default();
    for (path, x) in &ea {
        let Some(y) = eb.get(path) else {
            report.removed.push(path.clone());
            continue;
        };
        let keys: std::collections::BTreeSet<&String> = x.properties.keys().chain(y.properties.keys()).collect();
        for k in keys {
            let before = x.properties.get(k).cloned().unwrap_or(Value::Null);
            let after = y.properties.get(k).cloned().unwrap_or(Value::Null);
            if !same(&before, &after) {
                report.changed.push(Change { path: path.clone(), attribute: k.clone(), before, after });
            }
        }
    }
    report.added = eb.keys().filter(|p| !ea.contains_key(*p)).cloned().collect();
    report
}
