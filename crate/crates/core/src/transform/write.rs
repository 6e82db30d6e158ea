//! Reading and writing one attribute of one element.
//!
//! Per-mark and per-label styles are stored as overrides keyed by the data
//! that identifies the mark or label. When every member of a group ends up
//! with its own value for an attribute, [`compact_marks`] and
//! [`compact_guide_labels`] move the most common value back to the shared
//! style.

use serde_json::{Map, Value};

use super::ActionError;
use crate::rules::OptionValue;
use crate::value::{as_number, display, number, values_equal};
use crate::vis::{
    layer_marks, override_applies, AxisKey, AxisPart, Element, ElementRef, GuideLabel, Layer, LegendKey, LegendPart, MarkInfo, MarkType,
    Row, ScaleType, Segment, Style, StyleOverride, VisSpec, CHANNELS,
};

/// Style keys that belong to text rather than to lines and symbols.
pub const TEXT_STYLE_KEYS: &[&str] = &["fontSize", "fontWeight", "fontFamily", "fontStyle", "color", "angle", "align", "baseline"];

/// Rounds away binary noise from relative updates (`13 * 0.8` is `10.4`).
pub fn tidy(x: f64) -> f64 {
    let r = (x * 1e9).round() / 1e9;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Computes the value an option writes, given the element's current value.
pub fn resolve_value(current: Option<&Value>, v: &OptionValue, attr: &str, path: &str) -> Result<Value, ActionError> {
    let mismatch = || ActionError::TypeMismatch { attribute: attr.to_string(), element: path.to_string() };
    match v {
        OptionValue::Literal(x) => Ok(x.clone()),
        OptionValue::Nested(_) => Ok(v.to_value()),
        OptionValue::By(n) => {
            let cur = current.and_then(as_number).ok_or_else(mismatch)?;
            Ok(number(tidy(cur + n)))
        }
        OptionValue::Prod(n) => {
            let cur = current.and_then(as_number).ok_or_else(mismatch)?;
            Ok(number(tidy(cur * n)))
        }
    }
}

fn unsupported(attr: &str, e: &Element) -> ActionError {
    ActionError::UnsupportedAttribute { attribute: attr.to_string(), element: e.path.clone() }
}

fn expect_bool(v: &Value, attr: &str, e: &Element) -> Result<bool, ActionError> {
    v.as_bool().ok_or_else(|| ActionError::TypeMismatch { attribute: attr.to_string(), element: e.path.clone() })
}

fn expect_number(v: &Value, attr: &str, e: &Element) -> Result<f64, ActionError> {
    as_number(v).ok_or_else(|| ActionError::TypeMismatch { attribute: attr.to_string(), element: e.path.clone() })
}

fn set_style(style: &mut Style, attr: &str, v: Value) {
    if v.is_null() {
        style.remove(attr);
    } else {
        style.insert(attr.to_string(), v);
    }
}

/// Writes `attr` of element `e`. Returns the value written.
pub fn write_attr(spec: &mut VisSpec, e: &Element, attr: &str, v: &OptionValue) -> Result<Value, ActionError> {
    match &e.reference {
        ElementRef::View => {
            let cur = e.properties.get(attr).cloned();
            match attr {
                "width" | "height" => {
                    let val = resolve_value(cur.as_ref(), v, attr, &e.path)?;
                    let n = expect_number(&val, attr, e)?;
                    if attr == "width" {
                        spec.width = n;
                    } else {
                        spec.height = n;
                    }
                    Ok(number(n))
                }
                "size" => {
                    let val = resolve_value(Some(&number(spec.width)), v, attr, &e.path)?;
                    let n = expect_number(&val, attr, e)?;
                    spec.width = n;
                    spec.height = n;
                    Ok(number(n))
                }
                _ => Err(unsupported(attr, e)),
            }
        }
        ElementRef::Row | ElementRef::Column => {
            let val = resolve_value(e.properties.get(attr), v, attr, &e.path)?;
            match (attr, val.as_str()) {
                ("field", Some(f)) => {
                    let slot = if e.reference == ElementRef::Row { &mut spec.row_field } else { &mut spec.column_field };
                    let old = slot.replace(f.to_string());
                    let orient =
                        if e.reference == ElementRef::Row { crate::vis::Orientation::Row } else { crate::vis::Orientation::Column };
                    for a in spec.axes.iter_mut().filter(|a| a.orient == orient && Some(&a.field) == old.as_ref()) {
                        a.field = f.to_string();
                    }
                    Ok(val)
                }
                _ => Err(unsupported(attr, e)),
            }
        }
        ElementRef::Layout | ElementRef::Interaction(_) if attr == "params" => Err(unsupported(attr, e)),
        ElementRef::Layout => Err(unsupported(attr, e)),
        ElementRef::Layer(id) => {
            let encoding = is_encoding_write(spec, attr, v);
            let layer = spec.layer_mut(id).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
            write_layer_attr(layer, e, attr, v, encoding)
        }
        ElementRef::Mark { layer: id, key } => {
            if is_encoding_write(spec, attr, v) || attr == "mark" {
                let layer = spec.layer_mut(id).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
                return write_layer_attr(layer, e, attr, v, true);
            }
            let val = resolve_value(e.properties.get(attr), v, attr, &e.path)?;
            set_mark_style(spec, id, key, attr, val.clone(), false)?;
            Ok(val)
        }
        ElementRef::MarkLabel { layer: id, key } => {
            if attr == "field" {
                let val = resolve_value(None, v, attr, &e.path)?;
                let f = val.as_str().ok_or_else(|| unsupported(attr, e))?.to_string();
                if let Some(label) = spec.layer_mut(id).and_then(|l| l.label.as_mut()) {
                    label.field = f;
                }
                return Ok(val);
            }
            if attr == "text" {
                return Err(unsupported(attr, e));
            }
            let val = resolve_value(e.properties.get(attr), v, attr, &e.path)?;
            set_mark_style(spec, id, key, attr, val.clone(), true)?;
            Ok(val)
        }
        ElementRef::Axis(k) => write_axis_attr(spec, k, e, attr, v),
        ElementRef::AxisPart(k, part) => {
            let i = spec.axis_index(k).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
            let val = resolve_value(e.properties.get(attr), v, attr, &e.path)?;
            let axis = &mut spec.axes[i];
            match part {
                AxisPart::Label(value) => write_guide_label(&mut axis.labels, value, attr, val.clone()),
                AxisPart::Tick(_) => set_style(&mut axis.tick_style, attr, val.clone()),
                AxisPart::Domain => set_style(&mut axis.domain_style, attr, val.clone()),
                AxisPart::Grid => set_style(&mut axis.grid_style, attr, val.clone()),
                AxisPart::Title if attr == "text" => axis.title = val.as_str().map(String::from),
                AxisPart::Title => set_style(&mut axis.title_style, attr, val.clone()),
            }
            Ok(val)
        }
        ElementRef::Legend(k) => write_legend_attr(spec, k, e, attr, v),
        ElementRef::LegendPart(k, part) => {
            let i = legend_index(spec, k).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
            let val = resolve_value(e.properties.get(attr), v, attr, &e.path)?;
            let legend = &mut spec.legends[i];
            match part {
                LegendPart::Mark(_) => set_style(&mut legend.symbol_style, attr, val.clone()),
                LegendPart::Label(value) => write_guide_label(&mut legend.labels, value, attr, val.clone()),
                LegendPart::Title if attr == "text" => legend.title = val.as_str().map(String::from),
                LegendPart::Title => set_style(&mut legend.title_style, attr, val.clone()),
            }
            Ok(val)
        }
        ElementRef::Text { role, index } => {
            let t = spec
                .texts
                .iter_mut()
                .find(|t| t.role == *role && t.index == *index)
                .ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
            write_segments(&mut t.segments, e, attr, v)
        }
        ElementRef::Annotation(id) => {
            let a = spec.annotations.iter_mut().find(|a| a.id == *id).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
            if attr == "numbered" {
                let val = resolve_value(None, v, attr, &e.path)?;
                a.numbered = expect_bool(&val, attr, e)?;
                return Ok(val);
            }
            write_segments(&mut a.segments, e, attr, v)
        }
        ElementRef::Datum(i) => {
            if !spec.data.has_field(attr) {
                return Err(unsupported(attr, e));
            }
            let row = spec.data.rows.get_mut(*i).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
            let val = resolve_value(row.get(attr), v, attr, &e.path)?;
            row.insert(attr.to_string(), val.clone());
            Ok(val)
        }
        ElementRef::Interaction(i) => {
            let it = spec.interactions.get_mut(*i).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
            let val = resolve_value(it.params.get(attr), v, attr, &e.path)?;
            set_style(&mut it.params, attr, val.clone());
            Ok(val)
        }
    }
}

/// A channel write changes the encoding when it names a field, an encoding
/// object or `null`; a literal such as a color string is a static style.
pub(crate) fn is_encoding_write(spec: &VisSpec, attr: &str, v: &OptionValue) -> bool {
    if !CHANNELS.contains(&attr) || v.is_relative() {
        return false;
    }
    match v.to_value() {
        Value::Null | Value::Object(_) => true,
        Value::String(f) => spec.data.has_field(&f),
        _ => false,
    }
}

fn write_layer_attr(layer: &mut Layer, e: &Element, attr: &str, v: &OptionValue, encoding: bool) -> Result<Value, ActionError> {
    if encoding {
        if v.is_relative() {
            return Err(ActionError::TypeMismatch { attribute: attr.to_string(), element: e.path.clone() });
        }
        let val = v.to_value();
        set_encoding(layer, attr, &val, e)?;
        return Ok(val);
    }
    if attr == "mark" {
        let val = resolve_value(None, v, attr, &e.path)?;
        layer.mark = val.as_str().and_then(MarkType::parse).ok_or_else(|| unsupported(attr, e))?;
        return Ok(val);
    }
    let val = resolve_value(layer.style.get(attr), v, attr, &e.path)?;
    set_style(&mut layer.style, attr, val.clone());
    Ok(val)
}

/// Updates one channel of a layer from `{field, scale, operations}`, a field
/// name, or `null` (which drops the channel).
pub fn set_encoding(layer: &mut Layer, channel: &str, val: &Value, e: &Element) -> Result<(), ActionError> {
    let bad = || ActionError::TypeMismatch { attribute: channel.to_string(), element: e.path.clone() };
    match val {
        Value::Null => {
            layer.encoding.remove(channel);
            Ok(())
        }
        Value::String(f) => {
            match layer.encoding.get_mut(channel) {
                Some(enc) => enc.field = f.clone(),
                None => {
                    layer.encoding.insert(
                        channel.to_string(),
                        crate::vis::EncodingDef { field: f.clone(), scale: Default::default(), operations: Vec::new() },
                    );
                }
            }
            Ok(())
        }
        Value::Object(m) => {
            if !layer.encoding.contains_key(channel) {
                let f = m.get("field").and_then(Value::as_str).ok_or_else(bad)?;
                layer.encoding.insert(
                    channel.to_string(),
                    crate::vis::EncodingDef { field: f.to_string(), scale: Default::default(), operations: Vec::new() },
                );
            }
            let enc = layer.encoding.get_mut(channel).expect("inserted above");
            for (k, x) in m {
                match k.as_str() {
                    "field" => enc.field = x.as_str().ok_or_else(bad)?.to_string(),
                    "scale" => merge_scale(&mut enc.scale, x).map_err(|_| bad())?,
                    "operations" => enc.operations = serde_json::from_value(x.clone()).map_err(|_| bad())?,
                    _ => return Err(bad()),
                }
            }
            Ok(())
        }
        _ => Err(bad()),
    }
}

/// Merges `{type, domain, range}` into a scale; `null` clears a key.
pub fn merge_scale(scale: &mut crate::vis::ScaleDef, patch: &Value) -> Result<(), String> {
    let m = patch.as_object().ok_or("scale must be an object")?;
    for (k, x) in m {
        match k.as_str() {
            "type" => {
                scale.scale_type =
                    if x.is_null() { None } else { Some(serde_json::from_value::<ScaleType>(x.clone()).map_err(|e| e.to_string())?) }
            }
            "domain" => scale.domain = if x.is_null() { None } else { Some(x.as_array().ok_or("domain must be a list")?.clone()) },
            "range" => scale.range = if x.is_null() { None } else { Some(x.as_array().ok_or("range must be a list")?.clone()) },
            other => return Err(format!("unknown scale key {other}")),
        }
    }
    Ok(())
}

fn write_axis_attr(spec: &mut VisSpec, k: &AxisKey, e: &Element, attr: &str, v: &OptionValue) -> Result<Value, ActionError> {
    let i = spec.axis_index(k).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
    let val = resolve_value(e.properties.get(attr), v, attr, &e.path)?;
    match attr {
        "grid" | "domain" | "ticks" | "label" => {
            let b = expect_bool(&val, attr, e)?;
            let axis = &mut spec.axes[i];
            match attr {
                "grid" => axis.grid = b,
                "domain" => axis.domain = b,
                "ticks" => axis.ticks = b,
                _ => axis.label = b,
            }
        }
        "values" => {
            spec.axes[i].values = if val.is_null() { None } else { Some(val.as_array().ok_or_else(|| unsupported(attr, e))?.clone()) };
        }
        "title" => spec.axes[i].title = val.as_str().map(String::from),
        "side" => spec.axes[i].side = val.as_str().map(String::from),
        "scale" => {
            let channel = spec.axes[i].channel().to_string();
            let field = spec.axes[i].field.clone();
            for layer in &mut spec.layers {
                if let Some(enc) = layer.encoding.get_mut(&channel).filter(|enc| enc.field == field) {
                    merge_scale(&mut enc.scale, &val)
                        .map_err(|_| ActionError::TypeMismatch { attribute: attr.into(), element: e.path.clone() })?;
                }
            }
        }
        _ if TEXT_STYLE_KEYS.contains(&attr) => {
            let cur = spec.axes[i].label_style.get(attr).cloned();
            let val = resolve_value(cur.as_ref(), v, attr, &e.path)?;
            set_style(&mut spec.axes[i].label_style, attr, val.clone());
            return Ok(val);
        }
        _ => {
            let cur = spec.axes[i].domain_style.get(attr).cloned();
            let val = resolve_value(cur.as_ref(), v, attr, &e.path)?;
            set_style(&mut spec.axes[i].domain_style, attr, val.clone());
            return Ok(val);
        }
    }
    Ok(val)
}

pub fn legend_index(spec: &VisSpec, k: &LegendKey) -> Option<usize> {
    spec.legends.iter().enumerate().filter(|(_, l)| l.channel == k.channel && l.field == k.field).nth(k.n).map(|(i, _)| i)
}

fn write_legend_attr(spec: &mut VisSpec, k: &LegendKey, e: &Element, attr: &str, v: &OptionValue) -> Result<Value, ActionError> {
    let i = legend_index(spec, k).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
    let legend = &mut spec.legends[i];
    let val = match attr {
        "label" | "symbols" => {
            let val = resolve_value(None, v, attr, &e.path)?;
            let b = expect_bool(&val, attr, e)?;
            if attr == "label" {
                legend.label = b;
            } else {
                legend.symbols = b;
            }
            val
        }
        "title" => {
            let val = resolve_value(None, v, attr, &e.path)?;
            legend.title = val.as_str().map(String::from);
            val
        }
        "values" => {
            let val = resolve_value(None, v, attr, &e.path)?;
            legend.values = if val.is_null() { None } else { Some(val.as_array().ok_or_else(|| unsupported(attr, e))?.clone()) };
            val
        }
        _ if TEXT_STYLE_KEYS.contains(&attr) => {
            let val = resolve_value(legend.label_style.get(attr), v, attr, &e.path)?;
            set_style(&mut legend.label_style, attr, val.clone());
            val
        }
        _ => {
            let val = resolve_value(legend.symbol_style.get(attr), v, attr, &e.path)?;
            set_style(&mut legend.symbol_style, attr, val.clone());
            val
        }
    };
    Ok(val)
}

/// Writes text or a style attribute of every segment of a text element.
fn write_segments(segments: &mut Vec<Segment>, e: &Element, attr: &str, v: &OptionValue) -> Result<Value, ActionError> {
    if attr == "text" {
        let val = resolve_value(None, v, attr, &e.path)?;
        let text = display(&val);
        let old = std::mem::take(segments);
        for (i, line) in text.split('\n').enumerate() {
            let style = old.get(i).or(old.last()).map(|s| s.style.clone()).unwrap_or_default();
            segments.push(Segment { text: line.to_string(), style });
        }
        return Ok(val);
    }
    if attr == "segments" {
        let val = v.to_value();
        *segments = serde_json::from_value(val.clone())
            .map_err(|_| ActionError::TypeMismatch { attribute: attr.into(), element: e.path.clone() })?;
        return Ok(val);
    }
    let mut last = Value::Null;
    for seg in segments.iter_mut() {
        let val = resolve_value(seg.style.get(attr), v, attr, &e.path)?;
        set_style(&mut seg.style, attr, val.clone());
        last = val;
    }
    Ok(last)
}

fn write_guide_label(labels: &mut Vec<GuideLabel>, value: &Value, attr: &str, val: Value) {
    if attr == "text" {
        let segs = display(&val).split('\n').map(|t| Segment { text: t.to_string(), style: Style::new() }).collect();
        guide_label_mut(labels, value).segments = Some(segs);
        return;
    }
    set_style(&mut guide_label_mut(labels, value).style, attr, val);
}

pub fn guide_label_mut<'a>(labels: &'a mut Vec<GuideLabel>, value: &Value) -> &'a mut GuideLabel {
    match labels.iter().position(|l| values_equal(&l.value, value)) {
        Some(i) => &mut labels[i],
        None => {
            labels.push(GuideLabel::new(value.clone()));
            labels.last_mut().expect("just pushed")
        }
    }
}

/// The smallest part of a mark's key that tells it apart from the other
/// marks of its layer: a single field when one suffices, else the whole key.
pub fn mark_selector(marks: &[MarkInfo], mark_key: &Row, spec: &VisSpec) -> Row {
    let mut fields: Vec<&String> = mark_key.keys().collect();
    fields.sort_by_key(|f| (spec.data.datatype(f).is_some_and(|d| d == crate::vis::Datatype::Quantitative), (*f).clone()));
    for f in fields {
        let v = &mark_key[f];
        let same = marks.iter().filter(|m| m.key.get(f).is_some_and(|x| values_equal(x, v))).count();
        if same == 1 {
            return Row::from([(f.clone(), v.clone())]);
        }
    }
    mark_key.clone()
}

/// Sets one style attribute for one mark (or its label) via an override.
pub fn set_mark_style(spec: &mut VisSpec, layer_id: &str, key: &Row, attr: &str, val: Value, label: bool) -> Result<(), ActionError> {
    let layer = spec.layer(layer_id).ok_or_else(|| ActionError::Dangling(format!("layer[{layer_id}]")))?;
    let marks = layer_marks(spec, layer);
    let when = mark_selector(&marks, key, spec);
    let layer = spec.layer_mut(layer_id).expect("checked above");
    let overrides = if label {
        match layer.label.as_mut() {
            Some(l) => &mut l.overrides,
            None => return Err(ActionError::Dangling(format!("layer[{layer_id}] label"))),
        }
    } else {
        &mut layer.overrides
    };
    match overrides.iter_mut().find(|o| o.when == when) {
        Some(o) => set_style(&mut o.style, attr, val),
        None => {
            let mut style = Style::new();
            set_style(&mut style, attr, val);
            overrides.push(StyleOverride { when, style, hidden: false });
        }
    }
    Ok(())
}

/// Folds per-mark overrides back into the layer style where every mark has one.
pub fn compact_marks(spec: &mut VisSpec, layer_id: &str) {
    let Some(layer) = spec.layer(layer_id) else { return };
    let marks = layer_marks(spec, layer);
    let (base, overrides) = (layer.style.clone(), layer.overrides.clone());
    let (new_base, new_overrides) = compact(spec, &marks, base, overrides);
    let layer = spec.layer_mut(layer_id).expect("present");
    layer.style = new_base;
    layer.overrides = new_overrides;

    let Some(label) = spec.layer(layer_id).and_then(|l| l.label.clone()) else { return };
    let (new_base, new_overrides) = compact(spec, &marks, label.style, label.overrides);
    if let Some(l) = spec.layer_mut(layer_id).and_then(|l| l.label.as_mut()) {
        l.style = new_base;
        l.overrides = new_overrides;
    }
}

fn compact(spec: &VisSpec, marks: &[MarkInfo], mut base: Style, mut overrides: Vec<StyleOverride>) -> (Style, Vec<StyleOverride>) {
    if marks.is_empty() {
        return (base, overrides);
    }
    let attrs: std::collections::BTreeSet<String> = overrides.iter().flat_map(|o| o.style.keys().cloned()).collect();
    for attr in attrs {
        let mut per_mark: Vec<Value> = Vec::new();
        for m in marks {
            let v = overrides.iter().filter(|o| override_applies(spec, m, o)).filter_map(|o| o.style.get(&attr)).next_back();
            match v {
                Some(v) => per_mark.push(v.clone()),
                None => break,
            }
        }
        if per_mark.len() != marks.len() {
            continue;
        }
        let majority = majority(&per_mark);
        base.insert(attr.clone(), majority.clone());
        for o in overrides.iter_mut() {
            if o.style.get(&attr).is_some_and(|v| values_equal(v, &majority)) {
                o.style.remove(&attr);
            }
        }
    }
    overrides.retain(|o| !o.style.is_empty() || o.hidden);
    (base, overrides)
}

fn majority(values: &[Value]) -> Value {
    let mut best = &values[0];
    let mut best_n = 0;
    for v in values {
        let n = values.iter().filter(|x| values_equal(x, v)).count();
        if n > best_n {
            best = v;
            best_n = n;
        }
    }
    best.clone()
}

/// Folds per-value label styles into the shared label style where every
/// shown value has one.
pub fn compact_guide_labels(labels: &mut Vec<GuideLabel>, shared: &mut Style, values: &[Value]) {
    if values.is_empty() {
        return;
    }
    let attrs: std::collections::BTreeSet<String> = labels.iter().flat_map(|l| l.style.keys().cloned()).collect();
    for attr in attrs {
        let per_value: Vec<Value> = values
            .iter()
            .filter_map(|v| labels.iter().find(|l| values_equal(&l.value, v)).and_then(|l| l.style.get(&attr)).cloned())
            .collect();
        if per_value.len() != values.len() {
            continue;
        }
        let m = majority(&per_value);
        shared.insert(attr.clone(), m.clone());
        for l in labels.iter_mut() {
            if l.style.get(&attr).is_some_and(|v| values_equal(v, &m)) {
                l.style.remove(&attr);
            }
        }
    }
    labels.retain(|l| !l.style.is_empty() || l.segments.is_some() || l.hidden);
}

pub fn compact_axis(spec: &mut VisSpec, i: usize) {
    let ticks = spec.axis_ticks(&spec.axes[i]);
    let axis = &mut spec.axes[i];
    compact_guide_labels(&mut axis.labels, &mut axis.label_style, &ticks);
}

pub fn compact_legend(spec: &mut VisSpec, i: usize) {
    let values = spec.legend_values(&spec.legends[i]);
    let legend = &mut spec.legends[i];
    compact_guide_labels(&mut legend.labels, &mut legend.label_style, &values);
}

/// A JSON object from key-value pairs.
pub fn object(pairs: &[(&str, Value)]) -> Value {
    Value::Object(pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect::<Map<String, Value>>())
}
