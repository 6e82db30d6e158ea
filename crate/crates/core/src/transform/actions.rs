//! The eight actions.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Map, Value};

use super::defaults::{mimic_series, similar_role_fallback};
use super::propagate::rebind_guides;
use super::write::{guide_label_mut, legend_index, mark_selector, object, resolve_value};
use super::{ActionError, CompileContext};
use crate::layout::{default_placement, resolve_layout_with, PlacementKind};
use crate::predicate::DataPredicate;
use crate::query::resolve_option_scope;
use crate::rules::{normalize_role, OptionObj, OptionValue, Rule};
use crate::value::{as_number, compare, display, values_equal};
use crate::vis::{
    encodes, enumerate_elements, layer_marks, Anchor, Annotation, AxisDef, AxisKey, AxisPart, Element, ElementRef, InteractionDef,
    LegendDef, LegendKey, LegendPart, MarkType, Operation, Orientation, Placement, PlacementMode, Row, ScaleType, Segment, Style,
    StyleOverride, TextBlock, TextRole, VisSpec, CHANNELS,
};

type Attrs = BTreeMap<String, OptionValue>;

fn attrs_of(rule: &Rule) -> Option<&Attrs> {
    rule.option.as_ref().and_then(OptionObj::attrs)
}

fn unsupported(rule: &Rule, e: &Element) -> ActionError {
    ActionError::Unsupported { action: rule.action.name().to_string(), element: e.path.clone() }
}

fn truthy(v: &OptionValue) -> bool {
    !matches!(v, OptionValue::Literal(Value::Bool(false) | Value::Null))
}

/// `base`, or `base-2`, `base-3`, ... until `taken` says no.
fn unique_id(base: &str, taken: impl Fn(&str) -> bool) -> String {
    if !taken(base) {
        return base.to_string();
    }
    (2..).map(|n| format!("{base}-{n}")).find(|c| !taken(c)).expect("unbounded")
}

/// Layers an element stands for when an action works on encodings.
fn layers_of(spec: &VisSpec, elements: &[Element], selected: &[usize]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut push = |id: &str| {
        if !out.iter().any(|x| x == id) {
            out.push(id.to_string());
        }
    };
    for &i in selected {
        match &elements[i].reference {
            ElementRef::View | ElementRef::Layout => spec.layers.iter().for_each(|l| push(&l.id)),
            ElementRef::Layer(id) | ElementRef::Mark { layer: id, .. } | ElementRef::MarkLabel { layer: id, .. } => push(id),
            ElementRef::Axis(k) | ElementRef::AxisPart(k, _) => {
                let ch = crate::vis::axis_channel(k.orient);
                spec.layers.iter().filter(|l| l.encoding.get(ch).is_some_and(|e| e.field == k.field)).for_each(|l| push(&l.id));
            }
            ElementRef::Legend(k) | ElementRef::LegendPart(k, _) => {
                spec.layers.iter().filter(|l| l.encoding.get(&k.channel).is_some_and(|e| e.field == k.field)).for_each(|l| push(&l.id));
            }
            _ => {}
        }
    }
    out
}

pub(crate) fn modify(ctx: &mut CompileContext, rule: &Rule, elements: &[Element], selected: &[usize]) -> Result<(), ActionError> {
    let Some(attrs) = attrs_of(rule) else { return Ok(()) };
    apply_attrs(ctx, attrs, elements, selected)
}

fn apply_attrs(ctx: &mut CompileContext, attrs: &Attrs, elements: &[Element], selected: &[usize]) -> Result<(), ActionError> {
    for scoped in resolve_option_scope(attrs, selected, elements)? {
        let e = &elements[scoped.target];
        for (k, v) in &scoped.attrs {
            ctx.write(e, k, v)?;
        }
    }
    Ok(())
}

fn placement_of(spec: &VisSpec, e: &Element) -> Option<Placement> {
    match &e.reference {
        ElementRef::Text { role, index } => spec.texts.iter().find(|t| t.role == *role && t.index == *index).map(|t| t.position),
        ElementRef::Annotation(id) => spec.annotations.iter().find(|a| a.id == *id).map(|a| a.placement),
        ElementRef::MarkLabel { layer, .. } => spec.layer(layer).and_then(|l| l.label.as_ref()).map(|l| l.position),
        ElementRef::Axis(k) | ElementRef::AxisPart(k, AxisPart::Label(_)) => spec.axis_index(k).map(|i| spec.axes[i].label_position),
        ElementRef::Legend(k) | ElementRef::LegendPart(k, _) => legend_index(spec, k).map(|i| spec.legends[i].position),
        _ => None,
    }
}

fn set_placement(spec: &mut VisSpec, e: &Element, p: Placement) {
    match &e.reference {
        ElementRef::Text { role, index } => {
            if let Some(t) = spec.texts.iter_mut().find(|t| t.role == *role && t.index == *index) {
                t.position = p;
            }
        }
        ElementRef::Annotation(id) => {
            if let Some(a) = spec.annotations.iter_mut().find(|a| a.id == *id) {
                a.placement = p;
            }
        }
        ElementRef::MarkLabel { layer, .. } => {
            if let Some(l) = spec.layer_mut(layer).and_then(|l| l.label.as_mut()) {
                l.position = p;
            }
        }
        ElementRef::Axis(k) | ElementRef::AxisPart(k, _) => {
            if let Some(i) = spec.axis_index(k) {
                spec.axes[i].label_position = p;
            }
        }
        ElementRef::Legend(k) | ElementRef::LegendPart(k, _) => {
            if let Some(i) = legend_index(spec, k) {
                spec.legends[i].position = p;
            }
        }
        _ => {}
    }
}

/// Center of the largest empty area of the chart, ignoring `exclude`.
fn internal_point(ctx: &CompileContext, exclude: &str) -> Result<Placement, ActionError> {
    let frame = resolve_layout_with(&ctx.spec, ctx.resolution)?;
    Ok(default_placement(PlacementKind::NonDataAnnotation, &frame, (0.0, 0.0), None, 0, Some(exclude))?)
}

pub(crate) fn reposition(ctx: &mut CompileContext, rule: &Rule, elements: &[Element], selected: &[usize]) -> Result<(), ActionError> {
    let Some(attrs) = attrs_of(rule) else { return Ok(()) };
    for scoped in resolve_option_scope(attrs, selected, elements)? {
        let e = &elements[scoped.target];
        let mut attrs = scoped.attrs.clone();
        for key in ["number", "numbered"] {
            if let Some(v) = attrs.remove(key) {
                if !matches!(e.reference, ElementRef::Annotation(_)) {
                    return Err(unsupported(rule, e));
                }
                ctx.write(e, "numbered", &OptionValue::Literal(Value::Bool(truthy(&v))))?;
            }
        }
        if attrs.is_empty() {
            continue;
        }
        let Some(mut p) = placement_of(&ctx.spec, e) else { return Err(unsupported(rule, e)) };
        if !ctx.claim(&e.path, "position") {
            continue;
        }
        for (k, v) in &attrs {
            let on = truthy(v);
            match k.as_str() {
                "x" | "y" => {
                    let cur = if k == "x" { p.x } else { p.y };
                    let val = resolve_value(cur.map(crate::value::number).as_ref(), v, k, &e.path)?;
                    let n = as_number(&val).ok_or_else(|| ActionError::TypeMismatch { attribute: k.clone(), element: e.path.clone() })?;
                    if k == "x" {
                        p.x = Some(n);
                    } else {
                        p.y = Some(n);
                    }
                    if !matches!(p.mode, PlacementMode::Internal | PlacementMode::Fixed) {
                        p.mode = PlacementMode::Absolute;
                    }
                }
                "dx" | "dy" => {
                    // An absent offset is no offset.
                    let cur = if k == "dx" { p.dx } else { p.dy };
                    let val = resolve_value(Some(&crate::value::number(cur.unwrap_or(0.0))), v, k, &e.path)?;
                    let n = as_number(&val).ok_or_else(|| ActionError::TypeMismatch { attribute: k.clone(), element: e.path.clone() })?;
                    if k == "dx" {
                        p.dx = Some(n);
                    } else {
                        p.dy = Some(n);
                    }
                    if p.mode == PlacementMode::Auto {
                        p.mode = PlacementMode::Relative;
                    }
                }
                "external" | "internal" | "fix" | "fixed" | "serial" | "parallel" => {
                    let mode = match k.as_str() {
                        "external" => PlacementMode::External,
                        "internal" => PlacementMode::Internal,
                        "serial" => PlacementMode::Serial,
                        "parallel" => PlacementMode::Parallel,
                        _ => PlacementMode::Fixed,
                    };
                    if !on {
                        if p.mode == mode {
                            p.mode = PlacementMode::Auto;
                        }
                    } else if mode == PlacementMode::External {
                        p = Placement { mode, ..Placement::default() };
                    } else if mode == PlacementMode::Internal {
                        p = internal_point(ctx, &e.path)?;
                    } else {
                        p.mode = mode;
                    }
                }
                _ => return Err(ActionError::UnsupportedAttribute { attribute: k.clone(), element: e.path.clone() }),
            }
        }
        set_placement(&mut ctx.spec, e, p);
        ctx.record(&e.path, "position", serde_json::to_value(p).unwrap_or(Value::Null));
    }
    Ok(())
}

/// Moves each listed layer's encoding on `from` to `to`. Ranges follow the
/// new channel; domains stay. Guides follow their field.
pub fn replace_channel(spec: &mut VisSpec, layers: &[String], from: &str, to: &str) -> Result<(), ActionError> {
    if !CHANNELS.contains(&to) {
        return Err(ActionError::InvalidReplacement(format!("\"{to}\" is not a channel")));
    }
    for id in layers {
        let Some(layer) = spec.layer_mut(id) else { continue };
        let Some(enc) = layer.encoding.remove(from) else { continue };
        if layer.encoding.contains_key(to) {
            layer.encoding.insert(from.to_string(), enc);
            return Err(ActionError::InvalidReplacement(format!("layer \"{id}\" already encodes {to}")));
        }
        layer.encoding.insert(to.to_string(), retarget(enc, to));
    }
    rebind_guides(spec);
    Ok(())
}

/// Exchanges two channels on each listed layer.
pub fn swap_channels(spec: &mut VisSpec, layers: &[String], a: &str, b: &str) -> Result<(), ActionError> {
    for ch in [a, b] {
        if !CHANNELS.contains(&ch) {
            return Err(ActionError::InvalidReplacement(format!("\"{ch}\" is not a channel")));
        }
    }
    for id in layers {
        let Some(layer) = spec.layer_mut(id) else { continue };
        let ea = layer.encoding.remove(a);
        let eb = layer.encoding.remove(b);
        if let Some(e) = ea {
            layer.encoding.insert(b.to_string(), retarget(e, b));
        }
        if let Some(e) = eb {
            layer.encoding.insert(a.to_string(), retarget(e, a));
        }
    }
    rebind_guides(spec);
    Ok(())
}

fn retarget(mut enc: crate::vis::EncodingDef, channel: &str) -> crate::vis::EncodingDef {
    let position = matches!(channel, "x" | "y");
    enc.scale.range = match channel {
        "size" => Some(vec![json!(20), json!(400)]),
        "opacity" => Some(vec![json!(0.2), json!(1)]),
        _ => None,
    };
    enc.scale.scale_type = match enc.scale.scale_type {
        Some(ScaleType::Band) if !position => Some(ScaleType::Ordinal),
        Some(ScaleType::Ordinal) if position => Some(ScaleType::Band),
        t => t,
    };
    enc
}

pub(crate) fn transpose(ctx: &mut CompileContext, rule: &Rule, elements: &[Element], selected: &[usize]) -> Result<(), ActionError> {
    let mut layers: Vec<String> = Vec::new();
    let mut trellis = false;
    for &i in selected {
        let e = &elements[i];
        match &e.reference {
            ElementRef::View | ElementRef::Layer(_) | ElementRef::Mark { .. } => {
                for id in layers_of(&ctx.spec, elements, &[i]) {
                    if !layers.contains(&id) {
                        layers.push(id);
                    }
                }
            }
            ElementRef::Row | ElementRef::Column => trellis = true,
            ElementRef::MarkLabel { .. } | ElementRef::AxisPart(_, AxisPart::Label(_)) => {
                if !ctx.claim(&e.path, "position") {
                    continue;
                }
                let mut p = placement_of(&ctx.spec, e).ok_or_else(|| unsupported(rule, e))?;
                let attrs = attrs_of(rule);
                let want = |k: &str| attrs.and_then(|a| a.get(k)).is_some_and(truthy);
                p.mode = if want("serial") {
                    PlacementMode::Serial
                } else if want("parallel") {
                    PlacementMode::Parallel
                } else if p.mode == PlacementMode::Parallel {
                    PlacementMode::Serial
                } else {
                    PlacementMode::Parallel
                };
                set_placement(&mut ctx.spec, e, p);
                ctx.record(&e.path, "position", Value::from(p.mode.name()));
            }
            _ => return Err(ActionError::NoPairRelation { role: e.role.clone() }),
        }
    }
    if !layers.is_empty() {
        swap_channels(&mut ctx.spec, &layers, "x", "y")?;
        for id in &layers {
            ctx.record(&format!("layer[{id}]"), "transpose", Value::from("x<->y"));
        }
    }
    if trellis {
        let spec = &mut ctx.spec;
        std::mem::swap(&mut spec.row_field, &mut spec.column_field);
        for a in &mut spec.axes {
            a.orient = match a.orient {
                Orientation::Row => Orientation::Column,
                Orientation::Column => Orientation::Row,
                o => o,
            };
        }
        ctx.record("view.layout", "transpose", Value::from("row<->column"));
    }
    Ok(())
}

/// Merges values into an explicit list, sorted when the scale is ordered.
/// Values already present are reported, not added twice.
fn merge_values(ctx: &mut CompileContext, mut current: Vec<Value>, new: &Value, ordered: bool, what: &str) -> Vec<Value> {
    let items: Vec<Value> = match new {
        Value::Array(v) => v.clone(),
        other => vec![other.clone()],
    };
    for v in items {
        if current.iter().any(|c| values_equal(c, &v)) {
            ctx.diagnostic(format!("{what} already shows {v}"));
        } else {
            current.push(v);
        }
    }
    if ordered {
        current.sort_by(|a, b| compare(a, b).unwrap_or(std::cmp::Ordering::Equal));
    }
    current
}

fn text_segments(v: &Value) -> Vec<Segment> {
    match v {
        Value::Object(m) if m.contains_key("segments") => serde_json::from_value(m["segments"].clone()).unwrap_or_default(),
        Value::Object(m) => {
            let style: Style = m.get("style").and_then(|s| serde_json::from_value(s.clone()).ok()).unwrap_or_default();
            display(m.get("text").unwrap_or(&Value::Null))
                .split('\n')
                .map(|t| Segment { text: t.to_string(), style: style.clone() })
                .collect()
        }
        other => display(other).split('\n').map(|t| Segment { text: t.to_string(), style: Style::new() }).collect(),
    }
}

/// Styles new segments after `series`, else after a similar role.
fn style_new_segments(spec: &VisSpec, segs: Vec<Segment>, series: &[Vec<Segment>], role: &str) -> Vec<Segment> {
    mimic_series(&segs, series).unwrap_or_else(|| {
        let base = similar_role_fallback(role, spec);
        segs.into_iter()
            .map(|s| {
                let mut style = base.clone();
                style.extend(s.style);
                Segment { text: s.text, style }
            })
            .collect()
    })
}

fn add_text_block(ctx: &mut CompileContext, role: TextRole, v: &Value) {
    let series: Vec<Vec<Segment>> = ctx.spec.texts_of(role).iter().map(|t| t.segments.clone()).collect();
    let segs = style_new_segments(&ctx.spec, text_segments(v), &series, role.name());
    let index = series.len();
    ctx.spec.texts.push(TextBlock { role, index, segments: segs, position: Placement::default() });
    ctx.record(&format!("{}[{index}]", role.name()), "add", v.clone());
}

fn add_annotation(ctx: &mut CompileContext, v: &Value, anchor: Anchor) -> Result<(), ActionError> {
    let series: Vec<Vec<Segment>> =
        ctx.spec.annotations.iter().filter(|a| a.anchor.kind() == anchor.kind()).map(|a| a.segments.clone()).collect();
    let segs = style_new_segments(&ctx.spec, text_segments(v), &series, "annotation");
    let wanted = v.get("id").and_then(Value::as_str).unwrap_or("annotation");
    let id = unique_id(wanted, |c| ctx.spec.annotations.iter().any(|a| a.id == c));
    let independent = matches!(anchor, Anchor::Independent);
    ctx.spec.annotations.push(Annotation { id: id.clone(), anchor, segments: segs, placement: Placement::default(), numbered: false });
    let path = format!("annotation[{id}]");
    if independent {
        let p = internal_point(ctx, &path)?;
        if let Some(a) = ctx.spec.annotations.iter_mut().find(|a| a.id == id) {
            a.placement = p;
        }
    }
    ctx.record(&path, "add", v.clone());
    Ok(())
}

fn add_axis(ctx: &mut CompileContext, v: &Value) -> Result<(), ActionError> {
    let orient = match (v.get("orient").and_then(Value::as_str), v.get("channel").and_then(Value::as_str)) {
        (Some("horizontal"), _) | (_, Some("x")) => Orientation::Horizontal,
        (Some("vertical"), _) | (_, Some("y")) => Orientation::Vertical,
        _ => return Err(ActionError::InvalidReplacement("a new axis needs an orient or an x/y channel".into())),
    };
    let channel = crate::vis::axis_channel(orient);
    let field = match v.get("field").and_then(Value::as_str) {
        Some(f) => f.to_string(),
        None => ctx
            .spec
            .layers
            .iter()
            .find_map(|l| l.encoding.get(channel).map(|e| e.field.clone()))
            .ok_or_else(|| ActionError::InvalidReplacement(format!("no layer encodes {channel}")))?,
    };
    let mut axis = AxisDef::new(orient, field);
    axis.side = v.get("side").and_then(Value::as_str).map(String::from);
    if ctx.spec.axis_index(&axis.key()).is_some() {
        ctx.diagnostic(format!("the {} axis for \"{}\" already exists", orient.name(), axis.field));
        return Ok(());
    }
    axis.label_style = similar_role_fallback(&format!("{}.label", crate::vis::axis_role(orient)), &ctx.spec);
    ctx.record(&crate::vis::ElementRef::Axis(axis.key()).path(), "add", v.clone());
    ctx.spec.axes.push(axis);
    Ok(())
}

fn add_legend(ctx: &mut CompileContext, v: &Value) -> Result<(), ActionError> {
    let channel =
        v.get("channel").and_then(Value::as_str).ok_or_else(|| ActionError::InvalidReplacement("a new legend needs a channel".into()))?;
    let field = match v.get("field").and_then(Value::as_str) {
        Some(f) => f.to_string(),
        None => ctx
            .spec
            .layers
            .iter()
            .find_map(|l| l.encoding.get(channel).map(|e| e.field.clone()))
            .ok_or_else(|| ActionError::InvalidReplacement(format!("no layer encodes {channel}")))?,
    };
    if ctx.spec.legends.iter().any(|l| l.channel == channel && l.field == field) {
        ctx.diagnostic(format!("a {channel} legend for \"{field}\" already exists"));
        return Ok(());
    }
    let mut legend = new_legend(channel, &field);
    legend.label_style = similar_role_fallback("legend.label", &ctx.spec);
    ctx.record(&format!("legend[{channel}:{field}]"), "add", v.clone());
    ctx.spec.legends.push(legend);
    Ok(())
}

fn new_legend(channel: &str, field: &str) -> LegendDef {
    LegendDef {
        channel: channel.to_string(),
        field: field.to_string(),
        values: None,
        labels: Vec::new(),
        label: true,
        label_style: crate::vis::default_label_style(),
        symbols: true,
        symbol_style: Style::new(),
        title: None,
        title_style: Style::new(),
        position: Placement::default(),
    }
}

fn style_value(v: &OptionValue) -> Option<Style> {
    match v.to_value() {
        Value::Object(m) => Some(m.into_iter().collect()),
        _ => None,
    }
}

pub(crate) fn add(ctx: &mut CompileContext, rule: &Rule, elements: &[Element], selected: &[usize]) -> Result<(), ActionError> {
    let Some(attrs) = attrs_of(rule) else { return Ok(()) };
    let mut annotated_layers: BTreeMap<String, (String, Vec<Value>)> = BTreeMap::new();
    for &i in selected {
        let e = &elements[i];
        for (k, v) in attrs {
            let raw = v.to_value();
            match (&e.reference, k.as_str()) {
                (ElementRef::View, "title" | "subtitle" | "caption") => add_text_block(ctx, TextRole::parse(k).expect("text role"), &raw),
                (ElementRef::View, "annotation") => add_annotation(ctx, &raw, Anchor::Independent)?,
                (ElementRef::View, "axis") => add_axis(ctx, &raw)?,
                (ElementRef::View, "legend") => add_legend(ctx, &raw)?,
                (ElementRef::View, "interaction") => {
                    let it: InteractionDef = serde_json::from_value(raw.clone())
                        .map_err(|err| ActionError::InvalidReplacement(format!("bad interaction: {err}")))?;
                    ctx.spec.interactions.push(it);
                    ctx.record("view", "interaction", raw);
                }
                (ElementRef::View, "grid") => {
                    for a in 0..ctx.spec.axes.len() {
                        enable_axis_part(ctx, a, "grid", v);
                    }
                }
                (ElementRef::Axis(key), _) => {
                    let a = ctx.spec.axis_index(key).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
                    add_to_axis(ctx, a, e, k, v)?;
                }
                (ElementRef::Legend(key), _) => {
                    let l = legend_index(&ctx.spec, key).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
                    match k.as_str() {
                        "values" => {
                            let current = ctx.spec.legend_values(&ctx.spec.legends[l]);
                            let merged = merge_values(ctx, current, &raw, false, &e.path);
                            ctx.spec.legends[l].values = Some(merged.clone());
                            ctx.record(&e.path, "values", Value::Array(merged));
                        }
                        "title" => {
                            ctx.spec.legends[l].title = Some(display(&raw));
                            ctx.record(&e.path, "title", raw);
                        }
                        "label" => {
                            ctx.spec.legends[l].label = true;
                            ctx.record(&e.path, "label", Value::Bool(true));
                        }
                        "mark" | "symbols" => {
                            ctx.spec.legends[l].symbols = true;
                            ctx.record(&e.path, "symbols", Value::Bool(true));
                        }
                        _ => return Err(ActionError::UnsupportedAttribute { attribute: k.clone(), element: e.path.clone() }),
                    }
                }
                (ElementRef::Layer(id) | ElementRef::Mark { layer: id, .. }, "label") => {
                    add_mark_label(ctx, id, &raw)?;
                }
                (ElementRef::Layer(id) | ElementRef::Mark { layer: id, .. }, ch) if CHANNELS.contains(&ch) => {
                    let layer = ctx.spec.layer_mut(id).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
                    if layer.encoding.contains_key(ch) {
                        ctx.diagnostic(format!("layer \"{id}\" already encodes {ch}"));
                        continue;
                    }
                    super::write::set_encoding(layer, ch, &raw, e)?;
                    ctx.record(&format!("layer[{id}]"), ch, raw);
                }
                (ElementRef::Mark { layer, key }, "annotation") => {
                    let field = key.keys().next().cloned().ok_or_else(|| unsupported(rule, e))?;
                    let entry = annotated_layers.entry(layer.clone()).or_insert_with(|| (field.clone(), Vec::new()));
                    if let Some(v) = key.get(&entry.0) {
                        if !entry.1.iter().any(|x| values_equal(x, v)) {
                            entry.1.push(v.clone());
                        }
                    }
                }
                (ElementRef::Text { .. } | ElementRef::Annotation(_), "text" | "segments") => {
                    append_segments(ctx, e, &raw)?;
                }
                _ => return Err(ActionError::UnsupportedAttribute { attribute: k.clone(), element: e.path.clone() }),
            }
        }
    }
    if let Some(v) = attrs.get("annotation") {
        for (layer, (field, items)) in annotated_layers {
            add_annotation(ctx, &v.to_value(), Anchor::OnMark { layer: Some(layer), field, items })?;
        }
    }
    Ok(())
}

fn add_mark_label(ctx: &mut CompileContext, id: &str, raw: &Value) -> Result<(), ActionError> {
    let layer = ctx.spec.layer(id).ok_or_else(|| ActionError::Dangling(format!("layer[{id}]")))?;
    if layer.label.is_some() {
        ctx.diagnostic(format!("layer \"{id}\" is already labeled"));
        return Ok(());
    }
    let field = match raw.get("field").and_then(Value::as_str) {
        Some(f) => f.to_string(),
        None => layer
            .encoding
            .get("y")
            .or_else(|| layer.encoding.values().next())
            .map(|e| e.field.clone())
            .ok_or_else(|| ActionError::InvalidReplacement(format!("layer \"{id}\" has no field to label")))?,
    };
    let mut style = similar_role_fallback("layer.mark.label", &ctx.spec);
    if let Some(Value::Object(m)) = raw.get("style") {
        style.extend(m.clone());
    }
    let label = crate::vis::MarkLabelDef { field, style, position: Placement::default(), overrides: Vec::new() };
    ctx.spec.layer_mut(id).expect("checked").label = Some(label);
    ctx.record(&format!("layer[{id}]"), "label", raw.clone());
    Ok(())
}

fn append_segments(ctx: &mut CompileContext, e: &Element, raw: &Value) -> Result<(), ActionError> {
    let new = text_segments(raw);
    let segments = match &e.reference {
        ElementRef::Text { role, index } => {
            ctx.spec.texts.iter_mut().find(|t| t.role == *role && t.index == *index).map(|t| &mut t.segments)
        }
        ElementRef::Annotation(id) => ctx.spec.annotations.iter_mut().find(|a| a.id == *id).map(|a| &mut a.segments),
        _ => None,
    }
    .ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
    let styled = mimic_series(&new, std::slice::from_ref(segments)).unwrap_or(new);
    let model = segments.last().map(|s| s.style.clone()).unwrap_or_default();
    for mut s in styled {
        if s.style.is_empty() {
            s.style = model.clone();
        }
        segments.push(s);
    }
    ctx.record(&e.path, "segments", raw.clone());
    Ok(())
}

/// Turns on an axis part, styling it after a similar part elsewhere.
fn enable_axis_part(ctx: &mut CompileContext, a: usize, part: &str, v: &OptionValue) {
    let role = format!("{}.{part}", crate::vis::axis_role(ctx.spec.axes[a].orient));
    let explicit = style_value(v);
    let spec_snapshot = ctx.spec.clone();
    let axis = &mut ctx.spec.axes[a];
    let path = ElementRef::Axis(axis.key()).path();
    match part {
        "grid" => {
            if !axis.grid || explicit.is_some() {
                axis.grid = true;
                if axis.grid_style.is_empty() {
                    axis.grid_style = similar_role_fallback(&role, &spec_snapshot);
                }
                if let Some(s) = explicit {
                    axis.grid_style.extend(s);
                }
            }
        }
        "label" => {
            let was = axis.label;
            axis.label = true;
            if !was {
                let others = spec_snapshot.axes.iter().enumerate().find(|(j, x)| *j != a && x.label).map(|(_, x)| x.label_style.clone());
                axis.label_style = others.unwrap_or_else(|| similar_role_fallback(&role, &spec_snapshot));
            }
            if let Some(s) = explicit {
                axis.label_style.extend(s);
            }
        }
        "domain" => axis.domain = true,
        "ticks" | "tick" => axis.ticks = true,
        _ => {}
    }
    ctx.record(&path, part, Value::Bool(true));
}

fn add_to_axis(ctx: &mut CompileContext, a: usize, e: &Element, k: &str, v: &OptionValue) -> Result<(), ActionError> {
    let raw = v.to_value();
    match k {
        "values" => {
            let ordered = ctx.spec.axis_scale(&ctx.spec.axes[a]).is_some_and(|s| s.is_continuous() || s.scale_type == ScaleType::Time);
            let current = ctx.spec.axis_ticks(&ctx.spec.axes[a]);
            let merged = merge_values(ctx, current, &raw, ordered, &e.path);
            ctx.spec.axes[a].values = Some(merged.clone());
            ctx.record(&e.path, "values", Value::Array(merged));
        }
        "grid" | "label" | "domain" | "ticks" | "tick" => enable_axis_part(ctx, a, k, v),
        "title" => {
            let t = match &raw {
                Value::Object(m) => display(m.get("text").unwrap_or(&Value::Null)),
                other => display(other),
            };
            if ctx.spec.axes[a].title_style.is_empty() {
                let role = format!("{}.title", crate::vis::axis_role(ctx.spec.axes[a].orient));
                ctx.spec.axes[a].title_style = similar_role_fallback(&role, &ctx.spec);
            }
            ctx.spec.axes[a].title = Some(t);
            ctx.record(&e.path, "title", raw);
        }
        _ => return Err(ActionError::UnsupportedAttribute { attribute: k.to_string(), element: e.path.clone() }),
    }
    Ok(())
}

pub(crate) fn duplicate(ctx: &mut CompileContext, rule: &Rule, elements: &[Element], selected: &[usize]) -> Result<(), ActionError> {
    let mut copies: Vec<ElementRef> = Vec::new();
    for &i in selected {
        let e = &elements[i];
        let spec = &mut ctx.spec;
        let copy = match &e.reference {
            ElementRef::Text { role, index } => {
                let src = spec
                    .texts
                    .iter()
                    .find(|t| t.role == *role && t.index == *index)
                    .cloned()
                    .ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
                for t in spec.texts.iter_mut().filter(|t| t.role == *role && t.index > *index) {
                    t.index += 1;
                }
                spec.texts.push(TextBlock { index: index + 1, ..src });
                ElementRef::Text { role: *role, index: index + 1 }
            }
            ElementRef::Annotation(id) => {
                let src = spec.annotations.iter().find(|a| a.id == *id).cloned().ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
                let new_id = unique_id(&format!("{id}-copy"), |c| spec.annotations.iter().any(|a| a.id == c));
                spec.annotations.push(Annotation { id: new_id.clone(), ..src });
                ElementRef::Annotation(new_id)
            }
            ElementRef::Axis(k) => {
                let a = spec.axis_index(k).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
                let mut copy = spec.axes[a].clone();
                copy.side = match (&copy.side, copy.orient) {
                    (Some(_), _) => None,
                    (None, Orientation::Vertical) => Some("right".into()),
                    (None, _) => Some("top".into()),
                };
                if spec.axis_index(&copy.key()).is_some() {
                    ctx.diagnostic(format!("{} already has a copy on the other side", e.path));
                    continue;
                }
                let key = copy.key();
                spec.axes.insert(a + 1, copy);
                ElementRef::Axis(key)
            }
            ElementRef::Layer(id) => {
                let pos = spec.layers.iter().position(|l| l.id == *id).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
                let mut copy = spec.layers[pos].clone();
                copy.id = unique_id(&format!("{id}-copy"), |c| spec.layers.iter().any(|l| l.id == c));
                let r = ElementRef::Layer(copy.id.clone());
                spec.layers.insert(pos + 1, copy);
                r
            }
            ElementRef::MarkLabel { layer, .. } => {
                let Some((field, value)) = e.bound_value.clone() else { return Err(unsupported(rule, e)) };
                let style: Style = e.properties.get("style").and_then(|s| serde_json::from_value(s.clone()).ok()).unwrap_or_else(|| {
                    let label = spec.layer(layer).and_then(|l| l.label.as_ref());
                    let mut s = label.map(|l| l.style.clone()).unwrap_or_default();
                    for (k, v) in &e.properties {
                        if !matches!(k.as_str(), "text" | "position" | "mark") && !CHANNELS.contains(&k.as_str()) {
                            s.insert(k.clone(), v.clone());
                        }
                    }
                    s
                });
                let base = format!("{layer}-label-{}", display(&value));
                let id = unique_id(&base, |c| spec.annotations.iter().any(|a| a.id == c));
                spec.annotations.push(Annotation {
                    id: id.clone(),
                    anchor: Anchor::OnMark { layer: Some(layer.clone()), field, items: vec![value] },
                    segments: vec![Segment { text: display(e.properties.get("text").unwrap_or(&Value::Null)), style }],
                    placement: Placement::default(),
                    numbered: false,
                });
                ElementRef::Annotation(id)
            }
            ElementRef::Legend(k) => {
                let l = legend_index(spec, k).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
                let copy = spec.legends[l].clone();
                let n = spec.legends.iter().filter(|x| x.channel == k.channel && x.field == k.field).count();
                spec.legends.push(copy);
                ElementRef::Legend(LegendKey { n, ..k.clone() })
            }
            ElementRef::Datum(r) => {
                let row = spec.data.rows.get(*r).cloned().ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
                spec.data.rows.push(row);
                ElementRef::Datum(spec.data.rows.len() - 1)
            }
            ElementRef::Interaction(n) => {
                let it = spec.interactions.get(*n).cloned().ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
                spec.interactions.push(it);
                ElementRef::Interaction(spec.interactions.len() - 1)
            }
            _ => return Err(unsupported(rule, e)),
        };
        ctx.record(&copy.path(), "duplicate", Value::from(e.path.clone()));
        copies.push(copy);
    }
    if let Some(attrs) = attrs_of(rule) {
        let fresh = enumerate_elements(&ctx.spec);
        let targets: Vec<usize> = copies.iter().filter_map(|r| fresh.iter().position(|e| e.reference == *r)).collect();
        apply_attrs(ctx, attrs, &fresh, &targets)?;
    }
    Ok(())
}

/// Keeps a layer from drawing the marks with the given keys.
fn exclude_marks(spec: &mut VisSpec, layer_id: &str, keys: &[Row]) {
    let Some(layer) = spec.layer(layer_id) else { return };
    let marks = layer_marks(spec, layer);
    let mut single: BTreeMap<String, Vec<Value>> = BTreeMap::new();
    let mut preds: Vec<Value> = Vec::new();
    for key in keys {
        let sel = mark_selector(&marks, key, spec);
        if sel.len() == 1 {
            let (f, v) = sel.into_iter().next().expect("one entry");
            single.entry(f).or_default().push(v);
        } else {
            preds.push(Value::Array(sel.into_iter().map(|(f, v)| object(&[(f.as_str(), json!({ "neq": v }))])).collect()));
        }
    }
    for (f, vs) in single {
        preds.insert(0, object(&[(f.as_str(), json!({ "not": vs }))]));
    }
    let layer = spec.layer_mut(layer_id).expect("checked above");
    if let Some(enc) = layer.encoding.values_mut().next() {
        for p in preds {
            enc.operations.push(Operation::Filter(DataPredicate::new(p).expect("well-formed filter")));
        }
    }
}

fn hide_mark_labels(spec: &mut VisSpec, layer_id: &str, keys: &[Row]) {
    let Some(layer) = spec.layer(layer_id) else { return };
    let marks = layer_marks(spec, layer);
    let whens: Vec<Row> = keys.iter().map(|k| mark_selector(&marks, k, spec)).collect();
    let Some(label) = spec.layer_mut(layer_id).and_then(|l| l.label.as_mut()) else { return };
    for when in whens {
        match label.overrides.iter_mut().find(|o| o.when == when) {
            Some(o) => o.hidden = true,
            None => label.overrides.push(StyleOverride { when, style: Style::new(), hidden: true }),
        }
    }
}

pub(crate) fn remove(ctx: &mut CompileContext, rule: &Rule, elements: &[Element], selected: &[usize]) -> Result<(), ActionError> {
    if let Some(attrs) = attrs_of(rule) {
        return remove_parts(ctx, rule, attrs, elements, selected);
    }
    let mut rows: BTreeSet<usize> = BTreeSet::new();
    let mut marks: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    let mut labels: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    let mut layers: BTreeSet<String> = BTreeSet::new();
    let mut axes: Vec<AxisKey> = Vec::new();
    let mut axis_labels: BTreeMap<usize, Vec<Value>> = BTreeMap::new();
    let mut legends: Vec<LegendKey> = Vec::new();
    let mut legend_labels: BTreeMap<usize, Vec<Value>> = BTreeMap::new();
    let mut texts: Vec<(TextRole, usize)> = Vec::new();
    let mut annotations: BTreeSet<String> = BTreeSet::new();
    let mut interactions: BTreeSet<usize> = BTreeSet::new();

    for &i in selected {
        let e = &elements[i];
        ctx.record(&e.path, "remove", Value::Null);
        match &e.reference {
            ElementRef::Datum(r) => {
                rows.insert(*r);
            }
            ElementRef::Mark { layer, key } => marks.entry(layer.clone()).or_default().push(key.clone()),
            ElementRef::MarkLabel { layer, key } => labels.entry(layer.clone()).or_default().push(key.clone()),
            ElementRef::Layer(id) => {
                layers.insert(id.clone());
            }
            ElementRef::Axis(k) => axes.push(k.clone()),
            ElementRef::AxisPart(k, part) => {
                let a = ctx.spec.axis_index(k).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
                let axis = &mut ctx.spec.axes[a];
                match part {
                    AxisPart::Label(v) => axis_labels.entry(a).or_default().push(v.clone()),
                    AxisPart::Tick(_) => axis.ticks = false,
                    AxisPart::Domain => axis.domain = false,
                    AxisPart::Grid => axis.grid = false,
                    AxisPart::Title => axis.title = None,
                }
            }
            ElementRef::Legend(k) => legends.push(k.clone()),
            ElementRef::LegendPart(k, part) => {
                let l = legend_index(&ctx.spec, k).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
                let legend = &mut ctx.spec.legends[l];
                match part {
                    LegendPart::Label(v) => legend_labels.entry(l).or_default().push(v.clone()),
                    LegendPart::Mark(_) => legend.symbols = false,
                    LegendPart::Title => legend.title = None,
                }
            }
            ElementRef::Text { role, index } => texts.push((*role, *index)),
            ElementRef::Annotation(id) => {
                annotations.insert(id.clone());
            }
            ElementRef::Interaction(n) => {
                interactions.insert(*n);
            }
            ElementRef::Row => {
                ctx.spec.row_field = None;
            }
            ElementRef::Column => {
                ctx.spec.column_field = None;
            }
            ElementRef::View | ElementRef::Layout => return Err(unsupported(rule, e)),
        }
    }

    let spec = &mut ctx.spec;
    for (a, values) in axis_labels {
        let ticks = spec.axis_ticks(&spec.axes[a]);
        let axis = &mut spec.axes[a];
        if ticks.iter().all(|t| values.iter().any(|v| values_equal(v, t))) {
            axis.label = false;
        } else {
            for v in values {
                guide_label_mut(&mut axis.labels, &v).hidden = true;
            }
        }
    }
    for (l, values) in legend_labels {
        let shown = spec.legend_values(&spec.legends[l]);
        let legend = &mut spec.legends[l];
        if shown.iter().all(|t| values.iter().any(|v| values_equal(v, t))) {
            legend.label = false;
        } else {
            for v in values {
                guide_label_mut(&mut legend.labels, &v).hidden = true;
            }
        }
    }
    for (layer, keys) in labels {
        let Some(l) = spec.layer(&layer) else { continue };
        if layer_marks(spec, l).len() <= keys.len() {
            spec.layer_mut(&layer).expect("present").label = None;
        } else {
            hide_mark_labels(spec, &layer, &keys);
        }
    }
    for (layer, keys) in marks {
        let Some(l) = spec.layer(&layer) else { continue };
        if layer_marks(spec, l).len() <= keys.len() {
            layers.insert(layer);
        } else {
            exclude_marks(spec, &layer, &keys);
        }
    }
    spec.layers.retain(|l| !layers.contains(&l.id));
    spec.axes.retain(|a| !axes.contains(&a.key()));
    let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
    spec.legends.retain(|l| {
        let n = counts.entry((l.channel.clone(), l.field.clone())).or_insert(0);
        let key = LegendKey { channel: l.channel.clone(), field: l.field.clone(), n: *n };
        *n += 1;
        !legends.contains(&key)
    });
    spec.texts.retain(|t| !texts.contains(&(t.role, t.index)));
    spec.reindex_texts();
    spec.annotations.retain(|a| !annotations.contains(&a.id));
    let mut n = 0;
    spec.interactions.retain(|_| {
        n += 1;
        !interactions.contains(&(n - 1))
    });
    let mut r = 0;
    spec.data.rows.retain(|_| {
        r += 1;
        !rows.contains(&(r - 1))
    });
    Ok(())
}

fn names(v: &OptionValue) -> Vec<String> {
    match v.to_value() {
        Value::String(s) => vec![s],
        Value::Array(items) => items.iter().map(display).collect(),
        _ => Vec::new(),
    }
}

/// `remove` with an option: drops channels, parts, values or attributes of
/// the selected elements instead of the elements themselves.
fn remove_parts(
    ctx: &mut CompileContext,
    _rule: &Rule,
    attrs: &Attrs,
    elements: &[Element],
    selected: &[usize],
) -> Result<(), ActionError> {
    for &i in selected {
        let e = &elements[i];
        for (k, v) in attrs {
            match (&e.reference, k.as_str()) {
                (_, "channel") => {
                    let layers = layers_of(&ctx.spec, elements, &[i]);
                    for ch in names(v) {
                        for id in &layers {
                            if let Some(l) = ctx.spec.layer_mut(id) {
                                if l.encoding.remove(&ch).is_some() {
                                    ctx.record(&format!("layer[{id}]"), &ch, Value::Null);
                                }
                            }
                        }
                    }
                }
                (_, "operation") => {
                    let kinds = names(v);
                    for id in layers_of(&ctx.spec, elements, &[i]) {
                        if let Some(l) = ctx.spec.layer_mut(&id) {
                            for enc in l.encoding.values_mut() {
                                enc.operations.retain(|op| !kinds.iter().any(|k| k == op.kind()));
                            }
                        }
                    }
                }
                (ElementRef::View, "interaction") => {
                    let kinds = names(v);
                    ctx.spec.interactions.retain(|it| !kinds.iter().any(|k| k == it.kind.name()));
                }
                (ElementRef::View, "title" | "subtitle" | "caption") if truthy(v) => {
                    let role = TextRole::parse(k).expect("text role");
                    ctx.spec.texts.retain(|t| t.role != role);
                    ctx.record("view", k, Value::Null);
                }
                (ElementRef::Axis(key), part @ ("label" | "grid" | "domain" | "ticks" | "tick" | "title" | "values")) => {
                    let a = ctx.spec.axis_index(key).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
                    if part == "values" {
                        let drop = match v.to_value() {
                            Value::Array(items) => items,
                            other => vec![other],
                        };
                        let mut ticks = ctx.spec.axis_ticks(&ctx.spec.axes[a]);
                        ticks.retain(|t| !drop.iter().any(|d| values_equal(d, t)));
                        ctx.spec.axes[a].values = Some(ticks);
                    } else if truthy(v) {
                        let axis = &mut ctx.spec.axes[a];
                        match part {
                            "label" => axis.label = false,
                            "grid" => axis.grid = false,
                            "domain" => axis.domain = false,
                            "title" => axis.title = None,
                            _ => axis.ticks = false,
                        }
                    }
                    ctx.record(&e.path, part, Value::Null);
                }
                (ElementRef::Legend(key), part @ ("label" | "mark" | "symbols" | "title")) if truthy(v) => {
                    let l = legend_index(&ctx.spec, key).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
                    let legend = &mut ctx.spec.legends[l];
                    match part {
                        "label" => legend.label = false,
                        "title" => legend.title = None,
                        _ => legend.symbols = false,
                    }
                    ctx.record(&e.path, part, Value::Null);
                }
                (ElementRef::Layer(id) | ElementRef::Mark { layer: id, .. }, "label") if truthy(v) => {
                    if let Some(l) = ctx.spec.layer_mut(id) {
                        l.label = None;
                    }
                    ctx.record(&format!("layer[{id}]"), "label", Value::Null);
                }
                (ElementRef::View | ElementRef::Layout | ElementRef::Datum(_), _) => {
                    return Err(ActionError::UnsupportedAttribute { attribute: k.clone(), element: e.path.clone() })
                }
                _ => ctx.write(e, k, &OptionValue::Literal(Value::Null))?,
            }
        }
    }
    Ok(())
}

type Endpoints<'a> = (Option<&'a Map<String, Value>>, &'a Map<String, Value>);

fn endpoints(rule: &Rule) -> Option<Endpoints<'_>> {
    match rule.option.as_ref()? {
        OptionObj::FromTo { from, to } => Some((from.as_ref(), to.as_ref()?)),
        OptionObj::Pair(a, b) => Some((Some(a), b)),
        OptionObj::Attrs(_) => None,
    }
}

pub(crate) fn replace(ctx: &mut CompileContext, rule: &Rule, elements: &[Element], selected: &[usize]) -> Result<(), ActionError> {
    let Some((from, to)) = endpoints(rule) else { return Err(ActionError::InvalidReplacement("replace needs \"to\"".into())) };
    let get = |m: Option<&Map<String, Value>>, k: &str| m.and_then(|m| m.get(k)).and_then(Value::as_str).map(String::from);

    if let Some(to_ch) = get(Some(to), "channel") {
        if let Some(to_role) = get(Some(to), "role") {
            return replace_roles(ctx, elements, selected, &to_role, Some(&to_ch));
        }
        let from_ch = get(from, "channel")
            .or_else(|| rule.specifier.channel.clone())
            .ok_or_else(|| ActionError::InvalidReplacement("replacing a channel needs the channel to replace".into()))?;
        let layers = layers_of(&ctx.spec, elements, selected);
        if !layers.iter().any(|id| ctx.spec.layer(id).is_some_and(|l| l.encoding.contains_key(&from_ch))) {
            return Err(ActionError::InvalidReplacement(format!("no selected layer encodes {from_ch}")));
        }
        replace_channel(&mut ctx.spec, &layers, &from_ch, &to_ch)?;
        for id in &layers {
            ctx.record(&format!("layer[{id}]"), &from_ch, Value::from(to_ch.clone()));
        }
        return Ok(());
    }
    if let Some(to_mark) = get(Some(to), "mark") {
        let mark = MarkType::parse(&to_mark).ok_or_else(|| ActionError::InvalidReplacement(format!("unknown mark \"{to_mark}\"")))?;
        let from_mark = get(from, "mark").and_then(|m| MarkType::parse(&m));
        for id in layers_of(&ctx.spec, elements, selected) {
            let l = ctx.spec.layer_mut(&id).expect("layer of selection");
            if from_mark.is_none_or(|m| m == l.mark) {
                l.mark = mark;
                ctx.record(&format!("layer[{id}]"), "mark", Value::from(to_mark.clone()));
            }
        }
        return Ok(());
    }
    if let Some(to_field) = get(Some(to), "field") {
        let from_field =
            get(from, "field").ok_or_else(|| ActionError::InvalidReplacement("replacing a field needs \"from.field\"".into()))?;
        let only = get(from, "channel");
        let mut moved: Vec<String> = Vec::new();
        for id in layers_of(&ctx.spec, elements, selected) {
            let l = ctx.spec.layer_mut(&id).expect("layer of selection");
            for (ch, enc) in l.encoding.iter_mut() {
                if enc.field == from_field && only.as_ref().is_none_or(|o| o == ch) {
                    enc.field = to_field.clone();
                    enc.scale.domain = None;
                    moved.push(ch.clone());
                }
            }
        }
        let spec = &mut ctx.spec;
        for a in spec.axes.iter_mut().filter(|a| a.field == from_field && moved.iter().any(|c| c == a.channel())) {
            a.field = to_field.clone();
            a.values = None;
            a.labels.clear();
        }
        for l in spec.legends.iter_mut().filter(|l| l.field == from_field && moved.contains(&l.channel)) {
            l.field = to_field.clone();
            l.values = None;
            l.labels.clear();
        }
        ctx.record("view", "field", Value::from(to_field));
        return Ok(());
    }
    if let Some(to_role) = get(Some(to), "role") {
        return replace_roles(ctx, elements, selected, &to_role, None);
    }
    Err(ActionError::InvalidReplacement(format!("cannot replace with {}", Value::Object(to.clone()))))
}

fn replace_roles(
    ctx: &mut CompileContext,
    elements: &[Element],
    selected: &[usize],
    to_role: &str,
    to_channel: Option<&str>,
) -> Result<(), ActionError> {
    let target = normalize_role(to_role).map_err(|e| ActionError::InvalidReplacement(format!("unknown role \"{}\"", e.0)))?;
    let mut done_axes: Vec<AxisKey> = Vec::new();
    for &i in selected {
        let e = &elements[i];
        let invalid = || ActionError::InvalidReplacement(format!("{} cannot become {target}", e.role));
        match (&e.reference, target.as_str()) {
            (r, t) if e.role == t && !matches!(r, ElementRef::AxisPart(..)) => {}
            (ElementRef::Axis(k) | ElementRef::AxisPart(k, AxisPart::Label(_)), "legend") => {
                if done_axes.contains(k) {
                    continue;
                }
                done_axes.push(k.clone());
                let a = ctx.spec.axis_index(k).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
                let axis = ctx.spec.axes[a].clone();
                let channel = match to_channel {
                    Some(c) => c.to_string(),
                    None => {
                        let homes: Vec<&str> =
                            CHANNELS.iter().copied().filter(|c| !matches!(*c, "x" | "y") && encodes(&ctx.spec, c, &axis.field)).collect();
                        match homes[..] {
                            [c] => c.to_string(),
                            _ => {
                                return Err(ActionError::InvalidReplacement(format!(
                                    "no single non-position channel encodes \"{}\"",
                                    axis.field
                                )))
                            }
                        }
                    }
                };
                if !encodes(&ctx.spec, &channel, &axis.field) {
                    return Err(ActionError::InvalidReplacement(format!("no layer encodes \"{}\" on {channel}", axis.field)));
                }
                if matches!(e.reference, ElementRef::Axis(_)) {
                    ctx.spec.axes.remove(a);
                } else {
                    ctx.spec.axes[a].label = false;
                }
                if ctx.spec.legends.iter().any(|l| l.channel == channel && l.field == axis.field) {
                    ctx.diagnostic(format!("a {channel} legend for \"{}\" already exists", axis.field));
                } else {
                    let mut legend = new_legend(&channel, &axis.field);
                    legend.title = axis.title.clone();
                    legend.title_style = axis.title_style.clone();
                    legend.label_style = axis.label_style.clone();
                    legend.labels = axis.labels.clone();
                    ctx.spec.legends.push(legend);
                }
                ctx.record(&e.path, "replace", Value::from(format!("legend[{channel}:{}]", axis.field)));
            }
            (ElementRef::Legend(k), "hAxis" | "vAxis" | "axis") => {
                let channel = match target.as_str() {
                    "hAxis" => "x",
                    "vAxis" => "y",
                    _ => {
                        let homes: Vec<&str> = ["x", "y"].into_iter().filter(|c| encodes(&ctx.spec, c, &k.field)).collect();
                        match homes[..] {
                            [c] => c,
                            _ => return Err(invalid()),
                        }
                    }
                };
                if !encodes(&ctx.spec, channel, &k.field) {
                    return Err(ActionError::InvalidReplacement(format!("no layer encodes \"{}\" on {channel}", k.field)));
                }
                let l = legend_index(&ctx.spec, k).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
                let legend = ctx.spec.legends.remove(l);
                let orient = if channel == "x" { Orientation::Horizontal } else { Orientation::Vertical };
                let mut axis = AxisDef::new(orient, k.field.clone());
                axis.title = legend.title;
                axis.title_style = legend.title_style;
                axis.label_style = legend.label_style;
                axis.labels = legend.labels;
                if ctx.spec.axis_index(&axis.key()).is_none() {
                    ctx.record(&e.path, "replace", Value::from(ElementRef::Axis(axis.key()).path()));
                    ctx.spec.axes.push(axis);
                }
            }
            (ElementRef::Text { role, index }, t) => {
                let pos = ctx
                    .spec
                    .texts
                    .iter()
                    .position(|x| x.role == *role && x.index == *index)
                    .ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
                if let Some(new_role) = TextRole::parse(t) {
                    let next = ctx.spec.texts_of(new_role).len();
                    let tb = &mut ctx.spec.texts[pos];
                    tb.role = new_role;
                    tb.index = next;
                    ctx.spec.reindex_texts();
                    ctx.record(&e.path, "replace", Value::from(t));
                } else if t == "annotation" {
                    let tb = ctx.spec.texts.remove(pos);
                    ctx.spec.reindex_texts();
                    let id = unique_id(&format!("{}-{}", role.name(), index), |c| ctx.spec.annotations.iter().any(|a| a.id == c));
                    ctx.spec.annotations.push(Annotation {
                        id: id.clone(),
                        anchor: Anchor::Independent,
                        segments: tb.segments,
                        placement: Placement::default(),
                        numbered: false,
                    });
                    let path = format!("annotation[{id}]");
                    let p = internal_point(ctx, &path)?;
                    ctx.spec.annotations.last_mut().expect("just pushed").placement = p;
                    ctx.record(&e.path, "replace", Value::from(path));
                } else {
                    return Err(invalid());
                }
            }
            (ElementRef::Annotation(id), t) if TextRole::parse(t).is_some() => {
                let role = TextRole::parse(t).expect("checked");
                let pos = ctx.spec.annotations.iter().position(|a| a.id == *id).ok_or_else(|| ActionError::Dangling(e.path.clone()))?;
                let a = ctx.spec.annotations.remove(pos);
                let index = ctx.spec.texts_of(role).len();
                ctx.spec.texts.push(TextBlock { role, index, segments: a.segments, position: Placement::default() });
                ctx.record(&e.path, "replace", Value::from(format!("{t}[{index}]")));
            }
            _ => return Err(invalid()),
        }
    }
    Ok(())
}

pub(crate) fn swap(ctx: &mut CompileContext, rule: &Rule, elements: &[Element], selected: &[usize]) -> Result<(), ActionError> {
    let Some((Some(a), b)) = endpoints(rule) else { return Err(ActionError::InvalidReplacement("swap needs two entities".into())) };
    let get = |m: &Map<String, Value>, k: &str| m.get(k).and_then(Value::as_str).map(String::from);
    if let (Some(ca), Some(cb)) = (get(a, "channel"), get(b, "channel")) {
        let layers = layers_of(&ctx.spec, elements, selected);
        swap_channels(&mut ctx.spec, &layers, &ca, &cb)?;
        for id in &layers {
            ctx.record(&format!("layer[{id}]"), "swap", Value::from(format!("{ca}<->{cb}")));
        }
        return Ok(());
    }
    if let (Some(ra), Some(rb)) = (get(a, "role"), get(b, "role")) {
        if let (Some(ta), Some(tb)) = (TextRole::parse(&ra), TextRole::parse(&rb)) {
            let whole = selected.iter().any(|&i| elements[i].reference == ElementRef::View);
            let chosen: Vec<(TextRole, usize)> = elements
                .iter()
                .enumerate()
                .filter(|(i, _)| whole || selected.contains(i))
                .filter_map(|(_, e)| match e.reference {
                    ElementRef::Text { role, index } if role == ta || role == tb => Some((role, index)),
                    _ => None,
                })
                .collect();
            for t in ctx.spec.texts.iter_mut() {
                if chosen.contains(&(t.role, t.index)) {
                    t.role = if t.role == ta { tb } else { ta };
                }
            }
            ctx.spec.reindex_texts();
            ctx.record("view", "swap", Value::from(format!("{ra}<->{rb}")));
            return Ok(());
        }
    }
    Err(ActionError::InvalidReplacement(format!("cannot swap {} and {}", Value::Object(a.clone()), Value::Object(b.clone()))))
}
