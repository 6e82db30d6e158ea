//! Resolving specifiers to the elements they select.
//!
//! Every populated query axis is a per-element test, so a specifier selects
//! exactly the intersection of what its axes select on their own. Positions
//! (`index`, `even`/`odd` values) refer to an element's place among its
//! same-role siblings, not to its place in an intermediate result.

use std::collections::BTreeMap;

use serde_json::Value;

use crate::predicate::{match_attribute, PredicateError};
use crate::rules::{child_tokens, normalize_role, IndexSel, OptionValue, Specifier, ValuesSel};
use crate::value::values_equal;
use crate::vis::{enumerate_elements, Element, VisSpec};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum QueryError {
    #[error("unknown role \"{0}\"")]
    UnknownRole(String),
    #[error("index {index} is out of range for {len} element(s)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("\"{option}\" is not a subordinate element of \"{role}\"")]
    NoSuchSubordinate { option: String, role: String },
    #[error(transparent)]
    Predicate(#[from] PredicateError),
}

/// Elements selected by a specifier, in document order.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub specifier: Specifier,
    pub elements: Vec<Element>,
}

impl Selection {
    pub fn paths(&self) -> Vec<String> {
        self.elements.iter().map(|e| e.path.clone()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Resolves a specifier against a spec. Zero matches is an empty selection.
pub fn resolve(specifier: &Specifier, spec: &VisSpec) -> Result<Selection, QueryError> {
    let elements = enumerate_elements(spec);
    let idx = resolve_indices(specifier, spec, &elements)?;
    Ok(Selection { specifier: specifier.clone(), elements: idx.into_iter().map(|i| elements[i].clone()).collect() })
}

/// Like [`resolve`] over a precomputed enumeration; returns element indices.
pub fn resolve_indices(specifier: &Specifier, spec: &VisSpec, elements: &[Element]) -> Result<Vec<usize>, QueryError> {
    let role = specifier.canonical_role().map_err(|e| QueryError::UnknownRole(e.0))?;
    let counts = sibling_counts(elements);
    let mut out = Vec::new();
    for (i, e) in elements.iter().enumerate() {
        if role_matches(&role, e) && element_matches(specifier, spec, e, &counts)? {
            out.push(i);
        }
    }
    Ok(out)
}

fn sibling_counts(elements: &[Element]) -> BTreeMap<(Option<usize>, &str), usize> {
    let mut counts = BTreeMap::new();
    for e in elements {
        *counts.entry((e.parent, e.role.as_str())).or_insert(0) += 1;
    }
    counts
}

/// Whether a canonical query role covers an element's role.
pub fn role_matches(query: &str, e: &Element) -> bool {
    let role = e.role.as_str();
    if query == role {
        return true;
    }
    match query {
        "label" => role.ends_with(".label"),
        "text" => matches!(role, "title" | "subtitle" | "caption" | "annotation") || role.ends_with(".label") || role.ends_with(".title"),
        "layer.mark.label" => role == "annotation" && e.properties.get("anchor").is_some_and(|a| a == "on-mark"),
        _ => match query.strip_prefix("axis") {
            Some(rest) => {
                role.strip_prefix("hAxis").or_else(|| role.strip_prefix("vAxis")).or_else(|| role.strip_prefix("axis")) == Some(rest)
            }
            None => false,
        },
    }
}

fn element_matches(
    s: &Specifier,
    spec: &VisSpec,
    e: &Element,
    counts: &BTreeMap<(Option<usize>, &str), usize>,
) -> Result<bool, QueryError> {
    if let Some(m) = s.mark {
        if e.mark_type != Some(m) {
            return Ok(false);
        }
    }
    if let Some(index) = s.index {
        let len = counts.get(&(e.parent, e.role.as_str())).copied().unwrap_or(1);
        let ok = match index {
            IndexSel::Number(n) => e.ordinal == n,
            IndexSel::First => e.ordinal == 0,
            IndexSel::Last => e.ordinal + 1 == len,
            IndexSel::Even => e.ordinal.is_multiple_of(2),
            IndexSel::Odd => e.ordinal % 2 == 1,
        };
        if !ok {
            return Ok(false);
        }
    }
    if let Some(id) = &s.id {
        if e.id.as_ref() != Some(id) {
            return Ok(false);
        }
    }
    if let Some(f) = &s.field {
        if !e.fields.contains(f) {
            return Ok(false);
        }
    }
    if let Some(dt) = s.datatype {
        if !e.datatypes.contains(&dt) {
            return Ok(false);
        }
    }
    if let Some(c) = &s.channel {
        if !e.channels.contains(c) {
            return Ok(false);
        }
    }
    if !s.operation.iter().all(|o| e.operations.contains(o)) || !s.interaction.iter().all(|i| e.interactions.contains(i)) {
        return Ok(false);
    }
    if let Some(values) = &s.values {
        if !values_match(values, e) {
            return Ok(false);
        }
    }
    for (k, matcher) in &s.attributes {
        if !match_attribute(e.properties.get(k), matcher)? {
            return Ok(false);
        }
    }
    if let Some(pred) = &s.data {
        let dt = |f: &str| spec.data.datatype(f);
        let ok = match e.synthetic_row() {
            Some(row) => pred.eval(&row, &dt)?,
            None => {
                let mut any = false;
                for &r in &e.rows {
                    if pred.eval(&spec.data.rows[r], &dt)? {
                        any = true;
                        break;
                    }
                }
                any
            }
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

fn values_match(values: &ValuesSel, e: &Element) -> bool {
    match (&e.bound_value, values) {
        (Some((_, v)), ValuesSel::List(list)) => list.iter().any(|x| values_equal(x, v)),
        (Some(_), ValuesSel::Even) => e.ordinal.is_multiple_of(2),
        (Some(_), ValuesSel::Odd) => e.ordinal % 2 == 1,
        (None, ValuesSel::List(list)) => e.value_series.iter().any(|v| list.iter().any(|x| values_equal(x, v))),
        (None, ValuesSel::Even) => !e.value_series.is_empty(),
        (None, ValuesSel::Odd) => e.value_series.len() > 1,
    }
}

/// Picks list positions: a number is 0-based, `even`/`odd` are 0-based parities.
pub fn match_index<T: Clone>(items: &[T], index: IndexSel) -> Result<Vec<T>, QueryError> {
    Ok(match index {
        IndexSel::Number(n) => match items.get(n) {
            Some(x) => vec![x.clone()],
            None => return Err(QueryError::IndexOutOfRange { index: n, len: items.len() }),
        },
        IndexSel::First => items.first().cloned().into_iter().collect(),
        IndexSel::Last => items.last().cloned().into_iter().collect(),
        IndexSel::Even => items.iter().step_by(2).cloned().collect(),
        IndexSel::Odd => items.iter().skip(1).step_by(2).cloned().collect(),
    })
}

/// Value-bound parts (labels, ticks, legend entries) of the container at
/// `container` whose values match.
pub fn match_values(elements: &[Element], container: usize, values: &ValuesSel) -> Vec<usize> {
    (0..elements.len())
        .filter(|&i| elements[i].parent == Some(container) && elements[i].bound_value.is_some())
        .filter(|&i| values_match(values, &elements[i]))
        .collect()
}

/// Where part of an option applies: to a selected element itself or to one of
/// its subordinate elements.
#[derive(Debug, Clone, PartialEq)]
pub struct ScopedOption {
    pub target: usize,
    pub attrs: BTreeMap<String, OptionValue>,
}

/// Splits an option over a selection. Keys naming a subordinate role with an
/// object value apply to those subordinates; other keys apply to the selected
/// elements. An option `role` key scopes all remaining keys to that role.
pub fn resolve_option_scope(
    option: &BTreeMap<String, OptionValue>,
    selection: &[usize],
    elements: &[Element],
) -> Result<Vec<ScopedOption>, QueryError> {
    let option = lift_role_key(option);
    let mut out: Vec<ScopedOption> = Vec::new();
    for &sel in selection {
        let e = &elements[sel];
        let own_children = child_tokens(family_base(&e.role));
        let mut own: BTreeMap<String, OptionValue> = BTreeMap::new();
        for (k, v) in &option {
            let scoped = matches!(v, OptionValue::Nested(_)) && is_scoping_key(k, &e.role);
            if !scoped {
                own.insert(k.clone(), v.clone());
                continue;
            }
            if !own_children.contains(&k.as_str()) {
                return Err(QueryError::NoSuchSubordinate { option: k.clone(), role: e.role.clone() });
            }
            let OptionValue::Nested(inner) = v else { unreachable!() };
            for d in subordinates(elements, sel, k) {
                for scoped in resolve_option_scope(inner, &[d], elements)? {
                    merge_into(&mut out, scoped);
                }
            }
        }
        if !own.is_empty() {
            merge_into(&mut out, ScopedOption { target: sel, attrs: own });
        }
    }
    Ok(out)
}

fn merge_into(out: &mut Vec<ScopedOption>, item: ScopedOption) {
    match out.iter_mut().find(|o| o.target == item.target) {
        Some(o) => o.attrs.extend(item.attrs),
        None => out.push(item),
    }
}

fn lift_role_key(option: &BTreeMap<String, OptionValue>) -> BTreeMap<String, OptionValue> {
    match option.get("role") {
        Some(OptionValue::Literal(Value::String(r))) => {
            let token = r.rsplit('.').next().unwrap_or(r).to_string();
            let rest: BTreeMap<String, OptionValue> =
                option.iter().filter(|(k, _)| *k != "role").map(|(k, v)| (k.clone(), v.clone())).collect();
            BTreeMap::from([(token, OptionValue::Nested(rest))])
        }
        _ => option.clone(),
    }
}

/// Role whose child vocabulary applies to an element role (`hAxis` behaves as `axis`).
fn family_base(role: &str) -> &str {
    match role {
        "hAxis" | "vAxis" => "axis",
        r => r,
    }
}

/// A nested option key names a subordinate role unless it is an ordinary
/// attribute of the element (layer channels, axis `scale`, ...).
fn is_scoping_key(key: &str, role: &str) -> bool {
    if crate::vis::CHANNELS.contains(&key) && matches!(role, "layer" | "layer.mark") && key != "text" {
        return false;
    }
    if key == "text" {
        return false;
    }
    crate::rules::is_role_token(key)
}

/// Descendants of `root` whose role is the `token` child role.
pub fn subordinates(elements: &[Element], root: usize, token: &str) -> Vec<usize> {
    let root_role = elements[root].role.as_str();
    if root_role == "view" {
        let query = normalize_role(token).unwrap_or_else(|_| token.to_string());
        return (0..elements.len()).filter(|&i| i != root && role_matches(&query, &elements[i])).collect();
    }
    (0..elements.len())
        .filter(|&i| is_descendant(elements, i, root))
        .filter(|&i| elements[i].role.rsplit('.').next() == Some(token))
        .collect()
}

fn is_descendant(elements: &[Element], mut i: usize, root: usize) -> bool {
    while let Some(p) = elements[i].parent {
        if p == root {
            return true;
        }
        i = p;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vis::parse_vis_spec;
    use serde_json::json;

    fn spec() -> VisSpec {
        parse_vis_spec(
            r#"{
            "width": 300, "height": 200,
            "data": {"schema": [{"field": "item", "type": "nominal"}, {"field": "price", "type": "quantitative"},
                                {"field": "kind", "type": "nominal"}, {"field": "qty", "type": "quantitative"}],
                     "rows": [{"item": "a", "price": 30, "kind": "x", "qty": 1}, {"item": "b", "price": 40, "kind": "y", "qty": 2},
                              {"item": "c", "price": 50, "kind": "x", "qty": 3}]},
            "layers": [{"id": "l1", "mark": "bar", "encoding": {"x": {"field": "item"}, "y": {"field": "price"}}, "style": {"color": "red"}},
                       {"id": "l2", "mark": "point", "encoding": {"x": {"field": "item"}, "y": {"field": "price"}, "color": {"field": "kind"}}},
                       {"id": "l3", "mark": "point", "encoding": {"x": {"field": "item"}, "y": {"field": "price"}, "size": {"field": "qty"}}, "style": {"color": "blue"}}],
            "axes": [{"orient": "horizontal", "field": "item"}, {"orient": "vertical", "field": "price", "values": [30, 40, 50]}],
            "legends": [{"channel": "color", "field": "kind"}, {"channel": "size", "field": "qty"}],
            "texts": [{"role": "title", "index": 0, "segments": [{"text": "A"}]}, {"role": "title", "index": 1, "segments": [{"text": "B"}]}]
        }"#,
        )
        .unwrap()
    }

    fn paths(v: serde_json::Value) -> Vec<String> {
        resolve(&Specifier::from_value(&v).unwrap(), &spec()).unwrap().paths()
    }

    #[test]
    fn axis_by_field() {
        assert_eq!(paths(json!({"role": "axis", "field": "price"})), vec!["vAxis[price]"]);
    }

    #[test]
    fn legend_by_datatype() {
        assert_eq!(paths(json!({"role": "legend", "datatype": "nominal"})), vec!["legend[color:kind]"]);
    }

    #[test]
    fn marks_by_static_color() {
        let p = paths(json!({"role": "mark", "color": "red"}));
        assert_eq!(p.len(), 3);
        assert!(p.iter().all(|x| x.starts_with("layer[l1]")));
        assert!(paths(json!({"role": "mark", "channel": "color"})).iter().all(|x| x.starts_with("layer[l2]")));
    }

    #[test]
    fn axis_labels_by_values() {
        assert_eq!(paths(json!({"role": "axis.label", "values": [30, 50]})), vec!["vAxis[price].label[30]", "vAxis[price].label[50]"]);
        assert!(paths(json!({"role": "axis.label", "values": []})).is_empty());
        assert_eq!(paths(json!({"role": "title", "index": 1})), vec!["title[1]"]);
        assert_eq!(paths(json!({"role": "title", "index": "last"})), vec!["title[1]"]);
    }

    #[test]
    fn index_helpers() {
        assert_eq!(match_index(&["t0", "t1"], IndexSel::Number(1)).unwrap(), vec!["t1"]);
        assert_eq!(match_index(&["only"], IndexSel::First).unwrap(), match_index(&["only"], IndexSel::Last).unwrap());
        assert_eq!(match_index(&[0, 1, 2, 3, 4], IndexSel::Odd).unwrap(), vec![1, 3]);
        assert!(matches!(match_index(&[0], IndexSel::Number(3)), Err(QueryError::IndexOutOfRange { .. })));
    }

    #[test]
    fn unknown_role_errors() {
        let s = Specifier::from_value(&json!({"role": "marks"})).unwrap();
        assert!(matches!(resolve(&s, &spec()), Err(QueryError::UnknownRole(_))));
    }

    #[test]
    fn option_scope_reaches_subordinates() {
        let s = spec();
        let els = enumerate_elements(&s);
        let axis = resolve_indices(&Specifier::from_value(&json!({"role": "axis"})).unwrap(), &s, &els).unwrap();
        let opt = match OptionValue::from_json(&json!({"label": {"color": "blue"}, "domain": {"color": "red"}})).unwrap() {
            OptionValue::Nested(m) => m,
            _ => unreachable!(),
        };
        let scoped = resolve_option_scope(&opt, &axis, &els).unwrap();
        assert!(scoped.iter().any(|o| els[o.target].role == "vAxis.label"));
        assert!(scoped.iter().any(|o| els[o.target].role == "hAxis.domain"));
        assert!(scoped.iter().all(|o| !els[o.target].role.ends_with("Axis")));

        let title = resolve_indices(&Specifier::from_value(&json!({"role": "title"})).unwrap(), &s, &els).unwrap();
        let opt = match OptionValue::from_json(&json!({"mark": {"color": "red"}})).unwrap() {
            OptionValue::Nested(m) => m,
            _ => unreachable!(),
        };
        assert!(matches!(resolve_option_scope(&opt, &title, &els), Err(QueryError::NoSuchSubordinate { .. })));
    }
}
