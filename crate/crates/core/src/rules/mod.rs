//! Transformation rule documents (`.cicero.json`): a name, context metadata
//! and an ordered list of rules, each a specifier, an action and an option.

mod roles;

use std::collections::BTreeMap;
use std::fmt;

use serde_json::{Map, Value};

use crate::predicate::DataPredicate;
use crate::value::as_number;
use crate::vis::{Datatype, MarkType};

pub use roles::{child_tokens, is_role_token, normalize_role, UnknownRole, CANONICAL_ROLES};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum RuleError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("schema error in rule {rule}: {message}")]
    RuleSchema { rule: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Modify,
    Reposition,
    Transpose,
    Add,
    Duplicate,
    Remove,
    Replace,
    Swap,
}

impl Action {
    pub const ALL: [Action; 8] = [
        Action::Modify,
        Action::Reposition,
        Action::Transpose,
        Action::Add,
        Action::Duplicate,
        Action::Remove,
        Action::Replace,
        Action::Swap,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        Action::ALL.into_iter().find(|a| a.name() == s)
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Modify => "modify",
            Action::Reposition => "reposition",
            Action::Transpose => "transpose",
            Action::Add => "add",
            Action::Duplicate => "duplicate",
            Action::Remove => "remove",
            Action::Replace => "replace",
            Action::Swap => "swap",
        }
    }

    pub fn requires_option(self) -> bool {
        matches!(self, Action::Modify | Action::Reposition | Action::Add | Action::Replace | Action::Swap)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Display context a rule set targets. Unrecognized values are kept as written.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Metadata {
    pub condition: Option<String>,
    pub media_type: Option<String>,
    pub aspect_ratio: Option<Value>,
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexSel {
    Number(usize),
    First,
    Last,
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValuesSel {
    List(Vec<Value>),
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Specifier {
    /// Role as written, short forms expanded when the role is known.
    pub role: String,
    pub mark: Option<MarkType>,
    pub index: Option<IndexSel>,
    pub id: Option<String>,
    pub data: Option<DataPredicate>,
    pub field: Option<String>,
    pub values: Option<ValuesSel>,
    pub datatype: Option<Datatype>,
    pub channel: Option<String>,
    pub operation: Vec<String>,
    pub interaction: Vec<String>,
    /// Style and position attributes (`color`, `fontSize`, `text`, ...).
    pub attributes: BTreeMap<String, Value>,
}

impl Specifier {
    pub fn new(role: &str) -> Self {
        Specifier {
            role: normalize_role(role).unwrap_or_else(|_| role.to_string()),
            mark: None,
            index: None,
            id: None,
            data: None,
            field: None,
            values: None,
            datatype: None,
            channel: None,
            operation: Vec::new(),
            interaction: Vec::new(),
            attributes: BTreeMap::new(),
        }
    }

    /// The canonical role, or the unknown-role error deferred from parsing.
    pub fn canonical_role(&self) -> Result<String, UnknownRole> {
        normalize_role(&self.role)
    }

    pub fn from_value(value: &Value) -> Result<Self, String> {
        let map = value.as_object().ok_or_else(|| format!("specifier must be an object, got {value}"))?;
        let role = match map.get("role") {
            Some(Value::String(r)) => r.as_str(),
            Some(other) => return Err(format!("role must be a string, got {other}")),
            None => return Err("specifier is missing the required \"role\"".into()),
        };
        let mut s = Specifier::new(role);
        for (k, v) in map {
            match k.as_str() {
                "role" => {}
                "mark" => s.mark = Some(v.as_str().and_then(MarkType::parse).ok_or_else(|| format!("unknown mark type {v}"))?),
                "index" => s.index = Some(parse_index(v)?),
                "id" => s.id = Some(v.as_str().ok_or("id must be a string")?.to_string()),
                "data" => s.data = Some(DataPredicate::new(v.clone()).map_err(|e| e.to_string())?),
                "field" => s.field = Some(v.as_str().ok_or("field must be a string")?.to_string()),
                "values" => s.values = Some(parse_values(v)?),
                "datatype" => s.datatype = Some(v.as_str().and_then(Datatype::parse).ok_or_else(|| format!("unknown datatype {v}"))?),
                "channel" => s.channel = Some(v.as_str().ok_or("channel must be a string")?.to_string()),
                "operation" => s.operation = string_list(v, "operation", &["filter", "aggregate", "bin"])?,
                "interaction" => s.interaction = string_list(v, "interaction", &["zoom", "context", "tooltip", "filter"])?,
                _ => {
                    s.attributes.insert(k.clone(), v.clone());
                }
            }
        }
        Ok(s)
    }

    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("role".into(), Value::from(self.role.clone()));
        if let Some(mk) = self.mark {
            m.insert("mark".into(), Value::from(mk.name()));
        }
        if let Some(i) = self.index {
            m.insert(
                "index".into(),
                match i {
                    IndexSel::Number(n) => Value::from(n),
                    IndexSel::First => "first".into(),
                    IndexSel::Last => "last".into(),
                    IndexSel::Even => "even".into(),
                    IndexSel::Odd => "odd".into(),
                },
            );
        }
        if let Some(id) = &self.id {
            m.insert("id".into(), Value::from(id.clone()));
        }
        if let Some(d) = &self.data {
            m.insert("data".into(), d.as_value().clone());
        }
        if let Some(f) = &self.field {
            m.insert("field".into(), Value::from(f.clone()));
        }
        if let Some(v) = &self.values {
            m.insert(
                "values".into(),
                match v {
                    ValuesSel::List(l) => Value::Array(l.clone()),
                    ValuesSel::Even => "even".into(),
                    ValuesSel::Odd => "odd".into(),
                },
            );
        }
        if let Some(d) = self.datatype {
            m.insert("datatype".into(), serde_json::to_value(d).unwrap_or(Value::Null));
        }
        if let Some(c) = &self.channel {
            m.insert("channel".into(), Value::from(c.clone()));
        }
        if !self.operation.is_empty() {
            m.insert("operation".into(), Value::from(self.operation.clone()));
        }
        if !self.interaction.is_empty() {
            m.insert("interaction".into(), Value::from(self.interaction.clone()));
        }
        for (k, v) in &self.attributes {
            m.insert(k.clone(), v.clone());
        }
        Value::Object(m)
    }
}

fn parse_index(v: &Value) -> Result<IndexSel, String> {
    match v {
        Value::String(s) => match s.as_str() {
            "first" => Ok(IndexSel::First),
            "last" => Ok(IndexSel::Last),
            "even" => Ok(IndexSel::Even),
            "odd" => Ok(IndexSel::Odd),
            _ => Err(format!("unknown index \"{s}\"")),
        },
        Value::Number(n) => {
            n.as_u64().map(|n| IndexSel::Number(n as usize)).ok_or_else(|| format!("index must be a non-negative integer, got {n}"))
        }
        other => Err(format!("index must be a number or first/last/even/odd, got {other}")),
    }
}

fn parse_values(v: &Value) -> Result<ValuesSel, String> {
    match v {
        Value::Array(items) => Ok(ValuesSel::List(items.clone())),
        Value::String(s) if s == "even" => Ok(ValuesSel::Even),
        Value::String(s) if s == "odd" => Ok(ValuesSel::Odd),
        other => Ok(ValuesSel::List(vec![other.clone()])),
    }
}

fn string_list(v: &Value, what: &str, allowed: &[&str]) -> Result<Vec<String>, String> {
    let items: Vec<&Value> = match v {
        Value::Array(a) => a.iter().collect(),
        other => vec![other],
    };
    items
        .into_iter()
        .map(|i| match i.as_str() {
            Some(s) if allowed.contains(&s) => Ok(s.to_string()),
            _ => Err(format!("unknown {what} type {i}")),
        })
        .collect()
}

/// One option value: a literal, a relative update, or a nested option map.
#[derive(Debug, Clone, PartialEq)]
pub enum OptionValue {
    Literal(Value),
    /// Add to the current value.
    By(f64),
    /// Multiply the current value.
    Prod(f64),
    Nested(BTreeMap<String, OptionValue>),
}

impl OptionValue {
    pub fn from_json(v: &Value) -> Result<Self, String> {
        match v {
            Value::Object(m) if m.len() == 1 && (m.contains_key("by") || m.contains_key("prod")) => {
                let (k, arg) = m.iter().next().expect("one entry");
                let n = as_number(arg).ok_or_else(|| format!("\"{k}\" needs a number, got {arg}"))?;
                Ok(if k == "by" { OptionValue::By(n) } else { OptionValue::Prod(n) })
            }
            Value::Object(m) => Ok(OptionValue::Nested(parse_attr_map(m)?)),
            Value::String(s) if s.trim_end().ends_with("px") => match as_number(v) {
                Some(n) => Ok(OptionValue::Literal(crate::value::number(n))),
                None => Ok(OptionValue::Literal(v.clone())),
            },
            other => Ok(OptionValue::Literal(other.clone())),
        }
    }

    /// Plain JSON form, with relative updates written back as wrappers.
    pub fn to_value(&self) -> Value {
        match self {
            OptionValue::Literal(v) => v.clone(),
            OptionValue::By(n) => serde_json::json!({"by": crate::value::number(*n)}),
            OptionValue::Prod(n) => serde_json::json!({"prod": crate::value::number(*n)}),
            OptionValue::Nested(m) => Value::Object(m.iter().map(|(k, v)| (k.clone(), v.to_value())).collect()),
        }
    }

    pub fn is_relative(&self) -> bool {
        matches!(self, OptionValue::By(_) | OptionValue::Prod(_))
    }
}

fn parse_attr_map(m: &Map<String, Value>) -> Result<BTreeMap<String, OptionValue>, String> {
    m.iter().map(|(k, v)| Ok((k.clone(), OptionValue::from_json(v)?))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum OptionObj {
    Attrs(BTreeMap<String, OptionValue>),
    /// `from`/`to` are specifier-shaped maps without a required role.
    FromTo {
        from: Option<Map<String, Value>>,
        to: Option<Map<String, Value>>,
    },
    /// Two-element array form of swap.
    Pair(Map<String, Value>, Map<String, Value>),
}

impl OptionObj {
    pub fn to_value(&self) -> Value {
        match self {
            OptionObj::Attrs(m) => OptionValue::Nested(m.clone()).to_value(),
            OptionObj::FromTo { from, to } => {
                let mut m = Map::new();
                if let Some(f) = from {
                    m.insert("from".into(), Value::Object(f.clone()));
                }
                if let Some(t) = to {
                    m.insert("to".into(), Value::Object(t.clone()));
                }
                Value::Object(m)
            }
            OptionObj::Pair(a, b) => Value::Array(vec![Value::Object(a.clone()), Value::Object(b.clone())]),
        }
    }

    pub fn attrs(&self) -> Option<&BTreeMap<String, OptionValue>> {
        match self {
            OptionObj::Attrs(m) => Some(m),
            _ => None,
        }
    }
}

/// A swap/replace endpoint written as a bare string: a channel name or a role.
fn endpoint(v: &Value) -> Result<Map<String, Value>, String> {
    match v {
        Value::Object(m) => Ok(m.clone()),
        Value::String(s) if crate::vis::CHANNELS.contains(&s.as_str()) => Ok(Map::from_iter([("channel".to_string(), v.clone())])),
        Value::String(s) if normalize_role(s).is_ok() => Ok(Map::from_iter([("role".to_string(), v.clone())])),
        other => Err(format!("expected a channel, a role or an object, got {other}")),
    }
}

fn parse_option(action: Action, v: &Value) -> Result<OptionObj, String> {
    match v {
        Value::Array(items) => {
            if action != Action::Swap {
                return Err(format!("an array option is only allowed with swap, not {action}"));
            }
            if items.len() != 2 {
                return Err(format!("swap takes exactly two entities, got {}", items.len()));
            }
            Ok(OptionObj::Pair(endpoint(&items[0])?, endpoint(&items[1])?))
        }
        Value::Object(m) if m.contains_key("from") || m.contains_key("to") => {
            if !matches!(action, Action::Replace | Action::Swap) {
                return Err(format!("\"to\"/\"from\" are only allowed with replace or swap, not {action}"));
            }
            if let Some(extra) = m.keys().find(|k| *k != "from" && *k != "to") {
                return Err(format!("unexpected key \"{extra}\" next to \"to\"/\"from\""));
            }
            let from = m.get("from").map(endpoint).transpose()?;
            let to = m.get("to").map(endpoint).transpose()?;
            if action == Action::Swap && (from.is_none() || to.is_none()) {
                return Err("swap needs both \"from\" and \"to\"".into());
            }
            if action == Action::Replace && to.is_none() {
                return Err("replace needs \"to\"".into());
            }
            Ok(OptionObj::FromTo { from, to })
        }
        Value::Object(m) => {
            if matches!(action, Action::Replace | Action::Swap) {
                return Err(format!("{action} takes {{from, to}}{}", if action == Action::Swap { " or a two-element array" } else { "" }));
            }
            Ok(OptionObj::Attrs(parse_attr_map(m)?))
        }
        other => Err(format!("option must be an object, got {other}")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub specifier: Specifier,
    pub action: Action,
    pub option: Option<OptionObj>,
    pub important: bool,
}

impl Rule {
    pub fn from_value(value: &Value) -> Result<Self, String> {
        let map = value.as_object().ok_or_else(|| format!("rule must be an object, got {value}"))?;
        if let Some(extra) = map.keys().find(|k| !matches!(k.as_str(), "specifier" | "action" | "option" | "important")) {
            return Err(format!("unknown rule key \"{extra}\""));
        }
        let specifier = Specifier::from_value(map.get("specifier").ok_or("rule is missing \"specifier\"")?)?;
        let action = match map.get("action") {
            Some(Value::String(a)) => Action::parse(a).ok_or_else(|| format!("unknown action \"{a}\""))?,
            Some(other) => return Err(format!("action must be a string, got {other}")),
            None => return Err("rule is missing \"action\"".into()),
        };
        let option = match map.get("option") {
            None | Some(Value::Null) => None,
            Some(v) => Some(parse_option(action, v)?),
        };
        if option.is_none() && action.requires_option() {
            return Err(format!("action \"{action}\" requires an option"));
        }
        let important = match map.get("important") {
            None => false,
            Some(Value::Bool(b)) => *b,
            Some(other) => return Err(format!("important must be a boolean, got {other}")),
        };
        Ok(Rule { specifier, action, option, important })
    }

    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("specifier".into(), self.specifier.to_value());
        m.insert("action".into(), Value::from(self.action.name()));
        if let Some(o) = &self.option {
            m.insert("option".into(), o.to_value());
        }
        if self.important {
            m.insert("important".into(), Value::Bool(true));
        }
        Value::Object(m)
    }

    pub fn specificity(&self) -> usize {
        specificity_score(self)
    }
}

/// Number of populated specifier slots beyond the mandatory role. Data
/// predicates count once per term; operation and interaction lists count
/// once per entry.
pub fn specificity_score(rule: &Rule) -> usize {
    let s = &rule.specifier;
    usize::from(s.mark.is_some())
        + usize::from(s.index.is_some())
        + usize::from(s.id.is_some())
        + s.data.as_ref().map_or(0, |d| d.term_count())
        + usize::from(s.field.is_some())
        + usize::from(s.values.is_some())
        + usize::from(s.datatype.is_some())
        + usize::from(s.channel.is_some())
        + s.operation.len()
        + s.interaction.len()
        + s.attributes.len()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CiceroSpec {
    pub name: Option<String>,
    pub metadata: Metadata,
    pub transformations: Vec<Rule>,
}

impl CiceroSpec {
    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        if let Some(n) = &self.name {
            m.insert("name".into(), Value::from(n.clone()));
        }
        let md = &self.metadata;
        let mut mm: Map<String, Value> = md.extra.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        if let Some(c) = &md.condition {
            mm.insert("condition".into(), Value::from(c.clone()));
        }
        if let Some(c) = &md.media_type {
            mm.insert("mediaType".into(), Value::from(c.clone()));
        }
        if let Some(c) = &md.aspect_ratio {
            mm.insert("aspectRatio".into(), c.clone());
        }
        if !mm.is_empty() {
            m.insert("metadata".into(), Value::Object(mm));
        }
        m.insert("transformations".into(), Value::Array(self.transformations.iter().map(Rule::to_value).collect()));
        Value::Object(m)
    }
}

/// Parses a rule document, failing on the first problem.
pub fn parse_cicero_spec(text: &str) -> Result<CiceroSpec, RuleError> {
    let (spec, errors) = parse_collecting(text)?;
    match errors.into_iter().next() {
        Some(e) => Err(e),
        None => Ok(spec),
    }
}

/// Every problem in a rule document, one per offending rule.
pub fn cicero_errors(text: &str) -> Vec<RuleError> {
    match parse_collecting(text) {
        Ok((_, errs)) => errs,
        Err(e) => vec![e],
    }
}

pub fn cicero_from_value(value: &Value) -> Result<CiceroSpec, RuleError> {
    let (spec, errors) = from_value_collecting(value)?;
    match errors.into_iter().next() {
        Some(e) => Err(e),
        None => Ok(spec),
    }
}

fn parse_collecting(text: &str) -> Result<(CiceroSpec, Vec<RuleError>), RuleError> {
    let value: Value = serde_json::from_str(text).map_err(|e| RuleError::Syntax(e.to_string()))?;
    from_value_collecting(&value)
}

fn from_value_collecting(value: &Value) -> Result<(CiceroSpec, Vec<RuleError>), RuleError> {
    let map = value.as_object().ok_or_else(|| RuleError::Schema("a rule document must be an object".into()))?;
    if let Some(extra) = map.keys().find(|k| !matches!(k.as_str(), "name" | "metadata" | "transformations")) {
        return Err(RuleError::Schema(format!("unknown top-level key \"{extra}\"")));
    }
    let name = match map.get("name") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(other) => return Err(RuleError::Schema(format!("name must be a string, got {other}"))),
    };
    let metadata = match map.get("metadata") {
        None | Some(Value::Null) => Metadata::default(),
        Some(Value::Object(m)) => {
            let mut md = Metadata::default();
            for (k, v) in m {
                match k.as_str() {
                    "condition" => md.condition = Some(v.as_str().map(String::from).unwrap_or_else(|| v.to_string())),
                    "mediaType" => md.media_type = Some(v.as_str().map(String::from).unwrap_or_else(|| v.to_string())),
                    "aspectRatio" => md.aspect_ratio = Some(v.clone()),
                    _ => {
                        md.extra.insert(k.clone(), v.clone());
                    }
                }
            }
            md
        }
        Some(other) => return Err(RuleError::Schema(format!("metadata must be an object, got {other}"))),
    };
    let rules = match map.get("transformations") {
        Some(Value::Array(a)) => a,
        Some(other) => return Err(RuleError::Schema(format!("transformations must be a list, got {other}"))),
        None => return Err(RuleError::Schema("missing \"transformations\"".into())),
    };
    let mut transformations = Vec::new();
    let mut errors = Vec::new();
    for (i, r) in rules.iter().enumerate() {
        match Rule::from_value(r) {
            Ok(rule) => transformations.push(rule),
            Err(message) => errors.push(RuleError::RuleSchema { rule: i, message }),
        }
    }
    Ok((CiceroSpec { name, metadata, transformations }, errors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn rule(v: Value) -> Rule {
        Rule::from_value(&v).unwrap()
    }

    #[test]
    fn one_rule_document() {
        let spec =
            parse_cicero_spec(r#"{"transformations": [{"specifier": {"role": "mark"}, "action": "modify", "option": {"color": "red"}}]}"#)
                .unwrap();
        assert_eq!(spec.transformations.len(), 1);
        let r = &spec.transformations[0];
        assert_eq!(r.specifier.role, "layer.mark");
        assert_eq!(r.action, Action::Modify);
        assert!(!r.important);
        assert!(parse_cicero_spec(r#"{"transformations": []}"#).unwrap().transformations.is_empty());
    }

    #[test]
    fn add_without_option_is_rejected() {
        let err = parse_cicero_spec(r#"{"transformations": [{"specifier": {"role": "axis"}, "action": "add"}]}"#).unwrap_err();
        assert!(matches!(err, RuleError::RuleSchema { rule: 0, .. }));
        assert!(Rule::from_value(&json!({"specifier": {"role": "mark"}, "action": "remove"})).is_ok());
    }

    #[test]
    fn option_shapes_follow_action() {
        assert!(Rule::from_value(&json!({"specifier": {"role": "mark"}, "action": "modify", "option": {"to": {"channel": "x"}}})).is_err());
        assert!(Rule::from_value(&json!({"specifier": {"role": "layer"}, "action": "replace", "option": ["color", "size"]})).is_err());
        let r = rule(json!({"specifier": {"role": "layer"}, "action": "swap", "option": ["color", {"channel": "size"}]}));
        assert!(matches!(r.option, Some(OptionObj::Pair(..))));
        assert!(Rule::from_value(&json!({"specifier": {"role": "mark"}, "action": "modify", "option": {"size": {"by": "wide"}}})).is_err());
        assert!(Rule::from_value(&json!({"specifier": {}, "action": "remove"})).is_err());
        assert!(Rule::from_value(&json!({"specifier": {"role": "mark"}, "action": "shrink"})).is_err());
    }

    #[test]
    fn relative_updates_parse() {
        let r = rule(json!({"specifier": {"role": "text"}, "action": "modify", "option": {"fontSize": {"prod": 0.8}, "width": "350px"}}));
        let attrs = r.option.as_ref().unwrap().attrs().unwrap();
        assert_eq!(attrs["fontSize"], OptionValue::Prod(0.8));
        assert_eq!(attrs["width"], OptionValue::Literal(json!(350)));
    }

    #[test]
    fn specificity_counts_populated_slots() {
        let s = |v: Value| specificity_score(&rule(json!({"specifier": v, "action": "remove"})));
        assert_eq!(s(json!({"role": "mark"})), 0);
        assert_eq!(s(json!({"role": "mark", "data": {"category": "Apparel"}})), 1);
        assert_eq!(s(json!({"role": "axis.label", "field": "price", "values": [30, 50]})), 2);
        assert_eq!(s(json!({"role": "mark", "data": {"a": 1, "b": 2}, "operation": ["filter", "bin"], "color": "red"})), 5);
    }

    #[test]
    fn unknown_roles_are_kept_for_later() {
        let r = rule(json!({"specifier": {"role": "marks"}, "action": "remove"}));
        assert_eq!(r.specifier.role, "marks");
        assert!(r.specifier.canonical_role().is_err());
    }

    #[test]
    fn re_emitting_preserves_order() {
        let text = r#"{"name": "n", "metadata": {"condition": "small", "device": "watch"}, "transformations": [
            {"specifier": {"role": "view"}, "action": "modify", "option": {"width": 300}},
            {"specifier": {"role": "title", "index": 1}, "action": "remove", "important": true}]}"#;
        let spec = parse_cicero_spec(text).unwrap();
        let again = cicero_from_value(&spec.to_value()).unwrap();
        assert_eq!(spec, again);
        assert_eq!(again.metadata.extra["device"], json!("watch"));
    }
}
