//! Flat enumeration of every addressable element of a spec.
//!
//! Each element carries what queries need: its role, its position among
//! same-role siblings, the data rows it stands for and a flattened property
//! map. Enumeration order is document order and is deterministic.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;

use super::scale::{layer_marks, override_applies, MarkInfo};
use super::{Anchor, AxisDef, Datatype, GuideLabel, Layer, LegendDef, MarkType, Orientation, Row, Segment, Style, TextRole, VisSpec};
use crate::value::{display, key_string, values_equal};

/// Identity of an axis: the same field may have a second axis on the opposite side.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct AxisKey {
    pub orient: Orientation,
    pub field: String,
    pub side: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LegendKey {
    pub channel: String,
    pub field: String,
    /// Ordinal among legends sharing channel and field.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AxisPart {
    Label(Value),
    Tick(Value),
    Domain,
    Grid,
    Title,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LegendPart {
    Mark(Value),
    Label(Value),
    Title,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementRef {
    View,
    Layout,
    Row,
    Column,
    Layer(String),
    Mark { layer: String, key: Row },
    MarkLabel { layer: String, key: Row },
    Axis(AxisKey),
    AxisPart(AxisKey, AxisPart),
    Legend(LegendKey),
    LegendPart(LegendKey, LegendPart),
    Text { role: TextRole, index: usize },
    Annotation(String),
    Datum(usize),
    Interaction(usize),
}

impl ElementRef {
    /// Stable address used in query output, traces and write claims.
    pub fn path(&self) -> String {
        match self {
            ElementRef::View => "view".into(),
            ElementRef::Layout => "view.layout".into(),
            ElementRef::Row => "view.row".into(),
            ElementRef::Column => "view.column".into(),
            ElementRef::Layer(id) => format!("layer[{id}]"),
            ElementRef::Mark { layer, key } => format!("layer[{layer}].mark{}", row_key(key)),
            ElementRef::MarkLabel { layer, key } => format!("layer[{layer}].mark{}.label", row_key(key)),
            ElementRef::Axis(k) => axis_path(k),
            ElementRef::AxisPart(k, part) => {
                let base = axis_path(k);
                match part {
                    AxisPart::Label(v) => format!("{base}.label[{}]", key_string(v)),
                    AxisPart::Tick(v) => format!("{base}.tick[{}]", key_string(v)),
                    AxisPart::Domain => format!("{base}.domain"),
                    AxisPart::Grid => format!("{base}.grid"),
                    AxisPart::Title => format!("{base}.title"),
                }
            }
            ElementRef::Legend(k) => legend_path(k),
            ElementRef::LegendPart(k, part) => {
                let base = legend_path(k);
                match part {
                    LegendPart::Mark(v) => format!("{base}.mark[{}]", key_string(v)),
                    LegendPart::Label(v) => format!("{base}.label[{}]", key_string(v)),
                    LegendPart::Title => format!("{base}.title"),
                }
            }
            ElementRef::Text { role, index } => format!("{}[{index}]", role.name()),
            ElementRef::Annotation(id) => format!("annotation[{id}]"),
            ElementRef::Datum(i) => format!("data[{i}]"),
            ElementRef::Interaction(i) => format!("interaction[{i}]"),
        }
    }
}

fn row_key(key: &Row) -> String {
    let v = Value::Object(key.iter().map(|(k, v)| (k.clone(), v.clone())).collect());
    key_string(&v)
}

pub(crate) fn axis_role(orient: Orientation) -> &'static str {
    match orient {
        Orientation::Horizontal => "hAxis",
        Orientation::Vertical => "vAxis",
        Orientation::Row | Orientation::Column => "axis",
    }
}

fn axis_path(k: &AxisKey) -> String {
    let mut s = format!("{}[{}", axis_role(k.orient), k.field);
    if matches!(k.orient, Orientation::Row | Orientation::Column) {
        s = format!("axis[{}:{}", k.orient.name(), k.field);
    }
    if let Some(side) = &k.side {
        s.push('@');
        s.push_str(side);
    }
    s.push(']');
    s
}

fn legend_path(k: &LegendKey) -> String {
    if k.n == 0 {
        format!("legend[{}:{}]", k.channel, k.field)
    } else {
        format!("legend[{}:{}#{}]", k.channel, k.field, k.n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub reference: ElementRef,
    pub path: String,
    /// Canonical role, e.g. `layer.mark` or `hAxis.label`.
    pub role: String,
    /// Position among elements of the same role under the same parent.
    pub ordinal: usize,
    pub properties: BTreeMap<String, Value>,
    pub fields: Vec<String>,
    pub datatypes: Vec<Datatype>,
    pub channels: Vec<String>,
    pub operations: Vec<String>,
    pub interactions: Vec<String>,
    pub mark_type: Option<MarkType>,
    pub id: Option<String>,
    /// Data rows the element stands for.
    pub rows: Vec<usize>,
    /// For value-bound parts (axis labels, legend entries): field and value.
    pub bound_value: Option<(String, Value)>,
    /// For containers: the values of their value-bound parts.
    pub value_series: Vec<Value>,
    /// Index of the parent element in the enumeration.
    pub parent: Option<usize>,
}

impl Element {
    fn new(reference: ElementRef, role: impl Into<String>) -> Self {
        Element {
            path: reference.path(),
            reference,
            role: role.into(),
            ordinal: 0,
            properties: BTreeMap::new(),
            fields: Vec::new(),
            datatypes: Vec::new(),
            channels: Vec::new(),
            operations: Vec::new(),
            interactions: Vec::new(),
            mark_type: None,
            id: None,
            rows: Vec::new(),
            bound_value: None,
            value_series: Vec::new(),
            parent: None,
        }
    }

    /// The row a value-bound element is tested against by data queries.
    pub fn synthetic_row(&self) -> Option<Row> {
        self.bound_value.as_ref().map(|(f, v)| Row::from([(f.clone(), v.clone())]))
    }
}

struct Builder<'a> {
    spec: &'a VisSpec,
    out: Vec<Element>,
    ordinals: BTreeMap<(Option<usize>, String), usize>,
}

impl<'a> Builder<'a> {
    fn push(&mut self, mut e: Element, parent: Option<usize>) -> usize {
        e.parent = parent;
        let slot = self.ordinals.entry((parent, e.role.clone())).or_insert(0);
        e.ordinal = *slot;
        *slot += 1;
        for f in &e.fields {
            if let Some(dt) = self.spec.data.datatype(f) {
                if !e.datatypes.contains(&dt) {
                    e.datatypes.push(dt);
                }
            }
        }
        self.out.push(e);
        self.out.len() - 1
    }
}

/// Every addressable element of `spec`, in document order.
pub fn enumerate_elements(spec: &VisSpec) -> Vec<Element> {
    let mut b = Builder { spec, out: Vec::new(), ordinals: BTreeMap::new() };

    let mut view = Element::new(ElementRef::View, "view");
    view.properties.insert("width".into(), crate::value::number(spec.width));
    view.properties.insert("height".into(), crate::value::number(spec.height));
    view.rows = (0..spec.data.rows.len()).collect();
    let view_idx = b.push(view, None);

    let mut layout = Element::new(ElementRef::Layout, "view.layout");
    layout.rows = (0..spec.data.rows.len()).collect();
    b.push(layout, Some(view_idx));
    for (field, r, role) in [(&spec.row_field, ElementRef::Row, "view.row"), (&spec.column_field, ElementRef::Column, "view.column")] {
        if let Some(f) = field {
            let mut e = Element::new(r, role);
            e.fields.push(f.clone());
            e.properties.insert("field".into(), Value::from(f.clone()));
            e.rows = rows_with(spec, f);
            e.value_series = super::scale::distinct_values(spec.data.rows.iter(), f);
            b.push(e, Some(view_idx));
        }
    }

    for layer in &spec.layers {
        push_layer(&mut b, layer);
    }
    for axis in &spec.axes {
        push_axis(&mut b, axis);
    }
    let mut legend_counts: BTreeMap<(String, String), usize> = BTreeMap::new();
    for legend in &spec.legends {
        let n = legend_counts.entry((legend.channel.clone(), legend.field.clone())).or_insert(0);
        let key = LegendKey { channel: legend.channel.clone(), field: legend.field.clone(), n: *n };
        *n += 1;
        push_legend(&mut b, legend, key);
    }
    for role in [TextRole::Title, TextRole::Subtitle, TextRole::Caption] {
        for t in spec.texts_of(role) {
            let mut e = Element::new(ElementRef::Text { role, index: t.index }, role.name());
            text_properties(&mut e.properties, &t.segments, &Style::new());
            e.properties.insert("position".into(), Value::from(t.position.mode.name()));
            b.push(e, None);
        }
    }
    for ann in &spec.annotations {
        let mut e = Element::new(ElementRef::Annotation(ann.id.clone()), "annotation");
        e.id = Some(ann.id.clone());
        text_properties(&mut e.properties, &ann.segments, &Style::new());
        e.properties.insert("position".into(), Value::from(ann.placement.mode.name()));
        e.properties.insert("anchor".into(), Value::from(ann.anchor.kind()));
        if let Some(f) = ann.anchor.field() {
            e.fields.push(f.to_string());
            e.value_series = ann.anchor.items().to_vec();
            e.rows = annotation_rows(spec, &ann.anchor);
            if let Anchor::OnMark { layer: Some(l), .. } = &ann.anchor {
                e.properties.insert("layer".into(), Value::from(l.clone()));
            }
        }
        b.push(e, None);
    }
    for (i, row) in spec.data.rows.iter().enumerate() {
        let mut e = Element::new(ElementRef::Datum(i), "data");
        e.fields = spec.data.schema.iter().map(|f| f.field.clone()).collect();
        e.properties = row.clone();
        e.rows = vec![i];
        b.push(e, None);
    }
    for (i, it) in spec.interactions.iter().enumerate() {
        let mut e = Element::new(ElementRef::Interaction(i), "interaction");
        e.interactions.push(it.kind.name().to_string());
        e.properties = it.params.clone();
        b.push(e, None);
    }

    dedupe_paths(&mut b.out);
    b.out
}

fn dedupe_paths(elements: &mut [Element]) {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for e in elements.iter_mut() {
        if !seen.insert(e.path.clone()) {
            let mut k = 1;
            while !seen.insert(format!("{}#{k}", e.path)) {
                k += 1;
            }
            e.path = format!("{}#{k}", e.path);
        }
    }
}

fn rows_with(spec: &VisSpec, field: &str) -> Vec<usize> {
    (0..spec.data.rows.len()).filter(|&i| spec.data.rows[i].get(field).is_some_and(|v| !v.is_null())).collect()
}

/// Rows an anchored annotation stands for.
pub fn annotation_rows(spec: &VisSpec, anchor: &Anchor) -> Vec<usize> {
    let (field, items, layer) = match anchor {
        Anchor::OnMark { layer, field, items } => (field, items, layer.as_deref()),
        Anchor::OnAxis { field, items } => (field, items, None),
        Anchor::Independent => return Vec::new(),
    };
    let allowed: Option<Vec<usize>> = layer.and_then(|id| spec.layer(id)).map(|l| super::layer_rows(spec, l));
    (0..spec.data.rows.len())
        .filter(|i| allowed.as_ref().is_none_or(|a| a.contains(i)))
        .filter(|&i| spec.data.rows[i].get(field).is_some_and(|v| items.iter().any(|it| values_equal(it, v))))
        .collect()
}

fn text_properties(props: &mut BTreeMap<String, Value>, segments: &[Segment], base: &Style) {
    for (k, v) in base {
        props.insert(k.clone(), v.clone());
    }
    if let Some(first) = segments.first() {
        for (k, v) in &first.style {
            props.insert(k.clone(), v.clone());
        }
    }
    let text: Vec<&str> = segments.iter().map(|s| s.text.as_str()).collect();
    props.insert("text".into(), Value::from(text.join("\n")));
    props.insert("lines".into(), Value::from(segments.len()));
}

fn layer_common(e: &mut Element, layer: &Layer) {
    e.fields = layer.fields().into_iter().map(String::from).collect();
    e.channels = layer.encoding.keys().cloned().collect();
    for op in layer.operations() {
        if !e.operations.iter().any(|o| o == op.kind()) {
            e.operations.push(op.kind().to_string());
        }
    }
    e.mark_type = Some(layer.mark);
    e.id = Some(layer.id.clone());
    e.properties.insert("mark".into(), Value::from(layer.mark.name()));
    for (ch, enc) in &layer.encoding {
        let mut enc_obj = serde_json::Map::new();
        enc_obj.insert("field".into(), Value::from(enc.field.clone()));
        if let Ok(scale) = serde_json::to_value(&enc.scale) {
            if scale.as_object().is_some_and(|m| !m.is_empty()) {
                enc_obj.insert("scale".into(), scale);
            }
        }
        e.properties.insert(ch.clone(), Value::Object(enc_obj));
    }
}

fn push_layer(b: &mut Builder, layer: &Layer) {
    let spec = b.spec;
    let mut le = Element::new(ElementRef::Layer(layer.id.clone()), "layer");
    layer_common(&mut le, layer);
    for (k, v) in &layer.style {
        le.properties.insert(k.clone(), v.clone());
    }
    let marks = layer_marks(spec, layer);
    le.rows = marks.iter().flat_map(|m| m.rows.iter().copied()).collect();
    le.rows.sort_unstable();
    let layer_idx = b.push(le, None);

    for mark in &marks {
        let mut me = Element::new(ElementRef::Mark { layer: layer.id.clone(), key: mark.key.clone() }, "layer.mark");
        layer_common(&mut me, layer);
        me.properties.extend(effective_style(spec, mark, &layer.style, &layer.overrides));
        me.rows = mark.rows.clone();
        me.value_series = mark.key.values().cloned().collect();
        let mark_idx = b.push(me, Some(layer_idx));

        if let Some(label) = &layer.label {
            let hidden = label.overrides.iter().any(|o| o.hidden && override_applies(spec, mark, o));
            if hidden {
                continue;
            }
            let mut lbl = Element::new(ElementRef::MarkLabel { layer: layer.id.clone(), key: mark.key.clone() }, "layer.mark.label");
            lbl.fields = vec![label.field.clone()];
            lbl.mark_type = Some(layer.mark);
            lbl.id = Some(layer.id.clone());
            lbl.properties.extend(effective_style(spec, mark, &label.style, &label.overrides));
            let value = mark.rows.first().and_then(|&r| spec.data.rows[r].get(&label.field)).cloned().unwrap_or(Value::Null);
            lbl.properties.insert("text".into(), Value::from(display(&value)));
            lbl.properties.insert("position".into(), Value::from(label.position.mode.name()));
            lbl.rows = mark.rows.clone();
            lbl.bound_value = Some((label.field.clone(), value));
            b.push(lbl, Some(mark_idx));
        }
    }
}

/// Static style with every applicable per-mark override laid on top.
pub fn effective_style(spec: &VisSpec, mark: &MarkInfo, base: &Style, overrides: &[super::StyleOverride]) -> Style {
    let mut style = base.clone();
    for ov in overrides.iter().filter(|o| override_applies(spec, mark, o)) {
        for (k, v) in &ov.style {
            style.insert(k.clone(), v.clone());
        }
    }
    style
}

/// Style of one guide label: the shared style plus its per-value override.
pub fn guide_label_style(shared: &Style, labels: &[GuideLabel], value: &Value) -> Style {
    let mut style = shared.clone();
    if let Some(gl) = labels.iter().find(|l| values_equal(&l.value, value)) {
        for (k, v) in &gl.style {
            style.insert(k.clone(), v.clone());
        }
    }
    style
}

/// Segments shown by one guide label.
pub fn guide_label_segments(labels: &[GuideLabel], value: &Value) -> Vec<Segment> {
    labels
        .iter()
        .find(|l| values_equal(&l.value, value))
        .and_then(|l| l.segments.clone())
        .unwrap_or_else(|| vec![Segment { text: display(value), style: Style::new() }])
}

fn guide_label_hidden(labels: &[GuideLabel], value: &Value) -> bool {
    labels.iter().any(|l| l.hidden && values_equal(&l.value, value))
}

fn push_axis(b: &mut Builder, axis: &AxisDef) {
    let spec = b.spec;
    let key = axis.key();
    let role = axis_role(axis.orient);
    let ticks = spec.axis_ticks(axis);
    let rows = rows_with(spec, &axis.field);

    let mut ae = Element::new(ElementRef::Axis(key.clone()), role);
    ae.fields = vec![axis.field.clone()];
    ae.channels = vec![axis.channel().to_string()];
    ae.rows = rows.clone();
    ae.value_series = ticks.clone();
    ae.properties.insert("orient".into(), Value::from(axis.orient.name()));
    ae.properties.insert("grid".into(), Value::Bool(axis.grid));
    ae.properties.insert("domain".into(), Value::Bool(axis.domain));
    ae.properties.insert("ticks".into(), Value::Bool(axis.ticks));
    ae.properties.insert("values".into(), Value::Array(ticks.clone()));
    if let Some(t) = &axis.title {
        ae.properties.insert("title".into(), Value::from(t.clone()));
    }
    if let Some(scale) = spec.axis_scale(axis) {
        ae.properties.insert("scale".into(), serde_json::json!({"domain": scale.domain}));
    }
    let axis_idx = b.push(ae, None);

    if axis.label {
        let label_style = &axis.label_style;
        for v in &ticks {
            if guide_label_hidden(&axis.labels, v) {
                continue;
            }
            let mut e = Element::new(ElementRef::AxisPart(key.clone(), AxisPart::Label(v.clone())), format!("{role}.label"));
            e.fields = vec![axis.field.clone()];
            let style = guide_label_style(label_style, &axis.labels, v);
            text_properties(&mut e.properties, &guide_label_segments(&axis.labels, v), &style);
            e.properties.insert("position".into(), Value::from(axis.label_position.mode.name()));
            e.bound_value = Some((axis.field.clone(), v.clone()));
            e.rows = rows.iter().copied().filter(|&r| spec.data.rows[r].get(&axis.field).is_some_and(|x| values_equal(x, v))).collect();
            b.push(e, Some(axis_idx));
        }
    }
    if axis.ticks {
        for v in &ticks {
            let mut e = Element::new(ElementRef::AxisPart(key.clone(), AxisPart::Tick(v.clone())), format!("{role}.tick"));
            e.fields = vec![axis.field.clone()];
            e.properties.extend(axis.tick_style.clone());
            e.bound_value = Some((axis.field.clone(), v.clone()));
            b.push(e, Some(axis_idx));
        }
    }
    if axis.domain {
        let mut e = Element::new(ElementRef::AxisPart(key.clone(), AxisPart::Domain), format!("{role}.domain"));
        e.fields = vec![axis.field.clone()];
        e.properties.extend(axis.domain_style.clone());
        b.push(e, Some(axis_idx));
    }
    if axis.grid {
        let mut e = Element::new(ElementRef::AxisPart(key.clone(), AxisPart::Grid), format!("{role}.grid"));
        e.fields = vec![axis.field.clone()];
        e.properties.extend(axis.grid_style.clone());
        e.value_series = ticks.clone();
        b.push(e, Some(axis_idx));
    }
    if let Some(title) = &axis.title {
        let mut e = Element::new(ElementRef::AxisPart(key.clone(), AxisPart::Title), format!("{role}.title"));
        e.fields = vec![axis.field.clone()];
        e.properties.extend(axis.title_style.clone());
        e.properties.insert("text".into(), Value::from(title.clone()));
        b.push(e, Some(axis_idx));
    }
}

fn push_legend(b: &mut Builder, legend: &LegendDef, key: LegendKey) {
    let spec = b.spec;
    let values = spec.legend_values(legend);
    let mut le = Element::new(ElementRef::Legend(key.clone()), "legend");
    le.fields = vec![legend.field.clone()];
    le.channels = vec![legend.channel.clone()];
    le.rows = rows_with(spec, &legend.field);
    le.value_series = values.clone();
    le.properties.insert("values".into(), Value::Array(values.clone()));
    le.properties.insert("position".into(), Value::from(legend.position.mode.name()));
    if let Some(t) = &legend.title {
        le.properties.insert("title".into(), Value::from(t.clone()));
    }
    let legend_idx = b.push(le, None);

    if legend.symbols {
        for v in &values {
            let mut e = Element::new(ElementRef::LegendPart(key.clone(), LegendPart::Mark(v.clone())), "legend.mark");
            e.fields = vec![legend.field.clone()];
            e.channels = vec![legend.channel.clone()];
            e.properties.extend(legend.symbol_style.clone());
            e.bound_value = Some((legend.field.clone(), v.clone()));
            b.push(e, Some(legend_idx));
        }
    }
    if legend.label {
        let label_style = &legend.label_style;
        for v in &values {
            if guide_label_hidden(&legend.labels, v) {
                continue;
            }
            let mut e = Element::new(ElementRef::LegendPart(key.clone(), LegendPart::Label(v.clone())), "legend.label");
            e.fields = vec![legend.field.clone()];
            let style = guide_label_style(label_style, &legend.labels, v);
            text_properties(&mut e.properties, &guide_label_segments(&legend.labels, v), &style);
            e.bound_value = Some((legend.field.clone(), v.clone()));
            b.push(e, Some(legend_idx));
        }
    }
    if let Some(title) = &legend.title {
        let mut e = Element::new(ElementRef::LegendPart(key, LegendPart::Title), "legend.title");
        e.fields = vec![legend.field.clone()];
        e.properties.extend(legend.title_style.clone());
        e.properties.insert("text".into(), Value::from(title.clone()));
        b.push(e, Some(legend_idx));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vis::parse_vis_spec;

    const BARS: &str = r#"{
        "width": 400, "height": 200,
        "data": {"schema": [{"field": "cat", "type": "nominal"}, {"field": "n", "type": "quantitative"}],
                 "rows": []},
        "layers": [{"id": "bars", "mark": "bar", "encoding": {"x": {"field": "cat"}, "y": {"field": "n"}}}]
    }"#;

    #[test]
    fn empty_single_layer_spec_roles() {
        let spec = parse_vis_spec(BARS).unwrap();
        let roles: BTreeSet<String> = enumerate_elements(&spec).into_iter().map(|e| e.role).collect();
        let expected: BTreeSet<String> =
            ["view", "view.layout", "layer", "hAxis", "vAxis", "hAxis.domain", "vAxis.domain"].iter().map(|s| s.to_string()).collect();
        assert_eq!(roles, expected);
    }

    #[test]
    fn marks_and_labels_follow_rows() {
        let text = BARS.replace(r#""rows": []"#, r#""rows": [{"cat": "a", "n": 2}, {"cat": "b", "n": 4}]"#);
        let spec = parse_vis_spec(&text).unwrap();
        let els = enumerate_elements(&spec);
        let marks: Vec<&Element> = els.iter().filter(|e| e.role == "layer.mark").collect();
        assert_eq!(marks.len(), 2);
        assert_eq!(marks[1].ordinal, 1);
        assert_eq!(marks[0].path, r#"layer[bars].mark{"cat":"a","n":2}"#);
        assert!(els.iter().any(|e| e.role == "hAxis.label" && e.properties["text"] == "b"));
        assert!(!els.iter().any(|e| e.role.starts_with("legend")));
        let paths: BTreeSet<&String> = els.iter().map(|e| &e.path).collect();
        assert_eq!(paths.len(), els.len());
    }
}
